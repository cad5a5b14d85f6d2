# -*- coding: utf-8 -*-
import json
import os
import shutil
import tempfile

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')

SI_DOC_ID = '10.1039.C5DT04764A'
EX = 'https://example.org/synthesis#'
CH = 'https://example.org/characterisation#'
OM = 'http://www.ontology-of-units-of-measure.org/resource/om-2/'


def fixture_path(name):
    return os.path.join(FIXTURES, name)


class FixtureMixin(object):
    '''
        fixture schema, toolset and sessions; temporary work directories
        are removed after each test
    '''

    def fixture_path(self, name):
        return fixture_path(name)

    def read_fixture(self, name):
        with open(fixture_path(name), 'r', encoding='utf-8') as f:
            return f.read()

    def load_json_fixture(self, name):
        return json.loads(self.read_fixture(name))

    def build_schema(self):
        from ontoforge.schema import load_schema
        return load_schema(fixture_path('synthesis.ttl'))

    def build_extension_schema(self):
        from ontoforge.schema import load_schema
        return load_schema(fixture_path('characterisation.ttl'), main=self.build_schema())

    def build_toolset(self, schema=None):
        from ontoforge.compiler import compile_tools
        return compile_tools(schema or self.build_schema())

    def build_session(self, doc_id=SI_DOC_ID, workdir=None, feedback_enabled=True, schema=None, main_graph=None):
        from ontoforge.runtime import Session
        schema = schema or self.build_schema()
        return Session.open(schema, self.build_toolset(schema), doc_id, workdir=workdir,
                            feedback_enabled=feedback_enabled, main_graph=main_graph)

    def build_workdir(self):
        workdir = tempfile.mkdtemp(prefix='ontoforge-')
        self.addCleanup(shutil.rmtree, workdir, ignore_errors=True)
        return workdir

    def ex(self, local):
        from ontoforge.rdf import URIRef
        return URIRef(EX + local)

    def ch(self, local):
        from ontoforge.rdf import URIRef
        return URIRef(CH + local)

    def om(self, local):
        from ontoforge.rdf import URIRef
        return URIRef(OM + local)
