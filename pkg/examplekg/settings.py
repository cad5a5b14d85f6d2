import os

DEBUG = True

# Make this unique, and don't share it with anybody.
SECRET_KEY = 'examplekg-not-a-secret'

# ontoforge keeps its state in Turtle and JSON Lines files, not in a database
DATABASES = {}

INSTALLED_APPS = (
    'ontoforge',
)

USE_TZ = True

ONTOFORGE_BASE_IRI = 'https://example.org/kg/'

# the JSON-RPC wire of the serve command owns stdout
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(asctime)s %(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'ontoforge': {
            'handlers': ['stderr'],
            'level': os.environ.get('ONTOFORGE_LOG', 'INFO'),
        },
    },
}
