# -*- coding: utf-8 -*-
import logging

from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from ..compiler import CompileException
from ..endpoint import EndpointException
from ..evaluation import EvaluationException
from ..grounding import GroundingException
from ..rdf import RdfException
from ..runner import RunnerException
from ..runtime import RuntimeException
from ..schema import SchemaException
from ..utils import dump_json

logger = logging.getLogger(__name__)

DOMAIN_ERRORS = (
    RdfException, SchemaException, CompileException, RuntimeException, EndpointException,
    GroundingException, RunnerException, EvaluationException, ValidationError, OSError,
)


class OntoforgeCommand(BaseCommand):
    '''
        subclasses implement run(**options); domain failures surface as
        CommandError
    '''

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except DOMAIN_ERRORS as e:
            logger.debug('%s failed', self.__module__, exc_info=True)
            raise CommandError('%s: %s' % (e.__class__.__name__, e))

    def write_json(self, data):
        self.stdout.write(dump_json(data), ending='')


def read_model(model, path):
    '''a pydantic model loaded from a JSON file'''
    with open(path, 'r', encoding='utf-8') as f:
        return model.model_validate_json(f.read())
