from django.conf import settings

# read on every access so override_settings() is honoured
DEFAULTS = {
    'BASE_IRI': 'https://example.org/kg/',
    'TOP_ENTITY_MARKER': 'isTopEntity',
    'PROTOCOL_VERSION': '2024-11-05',
    'SERVER_NAME': 'ontoforge',
    'RETRY_BUDGET': 3,
    'TAU': '0.85',
    'LOOKUP_K': 5,
    'ALT_LABEL_PREDICATES': [],
    'SPARQL_TIMEOUT': 30,
    'PLACEHOLDER_VALUES': ['n/a', 'na', 'none', 'null', 'unknown', 'not specified', 'not reported', 'tbd', '-', '?'],
    'BOOTSTRAP_RESAMPLES': 1000,
    'UNIT_LABELS': {
        'http://www.ontology-of-units-of-measure.org/resource/om-2/degreeCelsius': 'degree Celsius',
        'http://www.ontology-of-units-of-measure.org/resource/om-2/kelvin': 'kelvin',
    },
}


class AppSettings(object):
    '''
        ONTOFORGE_* settings with package defaults
    '''
    prefix = 'ONTOFORGE_'

    def __getattr__(self, name):
        if name not in DEFAULTS:
            raise AttributeError(name)
        return getattr(settings, self.prefix + name, DEFAULTS[name])


app_settings = AppSettings()
