# -*- coding: utf-8 -*-
from ...evaluation import load_record_schema, project_records
from ...turtle import load_turtle
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = 'Project an A-Box into JSON records with the fixed query of a record schema.'

    def add_arguments(self, parser):
        parser.add_argument('--graph', required=True)
        parser.add_argument('--schema', required=True)

    def run(self, graph, schema, **options):
        self.write_json(project_records(load_turtle(graph), load_record_schema(schema)))
