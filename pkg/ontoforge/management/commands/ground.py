# -*- coding: utf-8 -*-
import argparse
import os
from fractions import Fraction

from ...grounding import MODES, ground_directory, ground_graph, load_index
from ...turtle import load_turtle, save_turtle
from ...utils import dump_json
from ..base import OntoforgeCommand


def similarity(text):
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError('%r is not a number' % text)
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError('%s is outside [0, 1]' % text)
    return value


class Command(OntoforgeCommand):
    help = 'Align locally minted instances to a reference graph via its label index.'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='source', required=True, help='A-Box file or directory of *.ttl')
        parser.add_argument('--index', required=True)
        parser.add_argument('--classes', nargs='+', required=True)
        parser.add_argument('--mode', choices=MODES, required=True)
        parser.add_argument('--tau', type=similarity, help='minimum similarity, e.g. 0.85')
        parser.add_argument('--k', type=int)
        parser.add_argument('--out', required=True, help='output file or directory')

    def run(self, source, index, classes, mode, tau, k, out, **options):
        index = load_index(index)
        if os.path.isdir(source):
            results = ground_directory(source, index, classes, mode, out, tau=tau, k=k)
            grounded = sum(len(m) for m in results.values())
            if options['verbosity'] > 0:
                self.stdout.write('%d file(s), %d grounded instance(s) -> %s' % (len(results), grounded, out))
            return
        graph, mapping = ground_graph(load_turtle(source), index, classes, mode, tau=tau, k=k)
        save_turtle(graph, out)
        with open('%s.grounding.json' % os.path.splitext(out)[0], 'w', encoding='utf-8') as f:
            f.write(dump_json(mapping.to_dict()))
        if options['verbosity'] > 0:
            self.stdout.write('%d grounded instance(s) -> %s' % (len(mapping), out))
