import os

DEBUG = True

SECRET_KEY = '1234567890'

DATABASES = {}

INSTALLED_APPS = (
    'ontoforge',
)

USE_TZ = True

# stdout carries the JSON-RPC wire of the serve command, so logs go to stderr
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(levelname)s %(name)s: %(message)s'},
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
            'level': os.environ.get('ONTOFORGE_LOG', 'WARNING'),
        },
    },
}

TESTING_ONTOFORGE = True
