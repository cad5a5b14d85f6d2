# -*- coding: utf-8 -*-
from ...runtime import validate_graph
from ...schema import load_schema
from ...turtle import load_turtle
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = 'Validate an A-Box against the hard constraints of a T-Box; prints the violations as JSON.'

    def add_arguments(self, parser):
        parser.add_argument('--tbox', required=True)
        parser.add_argument('--graph', required=True)
        parser.add_argument('--extends', dest='main_tbox', help='main T-Box the --tbox extension links into')
        parser.add_argument('--main-abox', help='main A-Box that cross-document links resolve against')

    def run(self, tbox, graph, main_tbox=None, main_abox=None, **options):
        main = load_schema(main_tbox) if main_tbox else None
        main_graph = load_turtle(main_abox) if main_abox else None
        reports = validate_graph(load_turtle(graph), load_schema(tbox, main=main), main_graph)
        self.write_json([r.to_dict() for r in reports])
