# -*- coding: utf-8 -*-
from django.core.management.base import CommandError

from ...grounding import build_label_index, discover_label_predicates, fetch_labels_from_endpoint, save_index
from ...rdf import RDFS
from ...turtle import load_turtle
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = 'Build a label index over instances of the given classes in a reference graph.'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--reference', help='reference graph in Turtle')
        source.add_argument('--endpoint', help='SPARQL endpoint URL')
        parser.add_argument('--classes', nargs='+', required=True)
        parser.add_argument('--predicates', nargs='*',
                            help='label predicates; discovered from the reference graph when omitted')
        parser.add_argument('--out', required=True)

    def run(self, reference, endpoint, classes, predicates, out, **options):
        if endpoint:
            index = fetch_labels_from_endpoint(endpoint, classes, predicates or [str(RDFS.label)])
        else:
            graph = load_turtle(reference)
            if not predicates:
                predicates = [str(p) for p, _ in discover_label_predicates(graph, classes)]
                if not predicates:
                    raise CommandError('no instance of %s carries a string label' % ', '.join(classes))
            index = build_label_index(graph, classes, predicates)
        save_index(index, out)
        if options['verbosity'] > 0:
            self.stdout.write('%d entries -> %s' % (len(index), out))
