# -*- coding: utf-8 -*-
import io

from ...evaluation import read_counts_table, write_score_table
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = 'Recompute Precision, Recall and F1 (plus an Overall row) from a TP/FP/FN table.'

    def add_arguments(self, parser):
        parser.add_argument('--counts', required=True, help='CSV with DOI, TP, FP, FN columns')

    def run(self, counts, **options):
        with open(counts, 'r', encoding='utf-8', newline='') as f:
            per_paper = read_counts_table(f)
        out = io.StringIO()
        write_score_table(per_paper, out)
        self.stdout.write(out.getvalue(), ending='')
