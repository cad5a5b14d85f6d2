# pytest wiring equivalent to tests/run_tests.sh:
# --pythonpath=tests --settings=test_settings
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'tests'))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'test_settings')

import django  # noqa: E402

django.setup()
