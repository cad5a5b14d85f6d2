# -*- coding: utf-8 -*-
import logging
import os

from ...evaluation import (Counts, aggregate, error_anatomy, load_record_schema, match_records, paper_files,
                           read_records, score, write_score_table)
from ...utils import dump_json
from ..base import OntoforgeCommand

logger = logging.getLogger(__name__)


class Command(OntoforgeCommand):
    help = 'Score predicted graphs or records against ground truth, per paper and per category.'

    def add_arguments(self, parser):
        parser.add_argument('--pred', required=True, help='directory of predicted <doi>.ttl or <doi>.json')
        parser.add_argument('--gold', required=True, help='directory of ground-truth <doi>.ttl or <doi>.json')
        parser.add_argument('--schema', nargs='+', required=True, help='record schema file(s), one per category')
        parser.add_argument('--out', required=True)

    def run(self, pred, gold, schema, out, **options):
        predicted, truth = paper_files(pred), paper_files(gold)
        for doi in sorted(set(predicted) - set(truth)):
            logger.warning('no ground truth for predicted paper %s; it is left out of the scores', doi)
        os.makedirs(out, exist_ok=True)
        per_category = {}
        categories = {}
        for path in schema:
            record_schema = load_record_schema(path)
            per_paper = {}
            for doi in sorted(truth):
                gold_records = read_records(truth[doi], record_schema)
                pred_records = read_records(predicted[doi], record_schema) if doi in predicted else []
                per_paper[doi] = match_records(pred_records, gold_records, record_schema)
            with open(os.path.join(out, '%s.csv' % record_schema.category), 'w', encoding='utf-8') as f:
                write_score_table(per_paper, f)
            total = sum(per_paper.values(), Counts())
            per_category[record_schema.category] = total
            categories[record_schema.category] = {
                'counts': total.to_dict(),
                'metrics': score(total).to_dict(),
                'anatomy': error_anatomy(per_paper).to_dict(),
            }
        micro, macro = aggregate(per_category)
        metrics = {'categories': categories, 'micro': micro.to_dict(), 'macro': macro.to_dict(),
                   'papers': sorted(truth)}
        with open(os.path.join(out, 'metrics.json'), 'w', encoding='utf-8') as f:
            f.write(dump_json(metrics))
        if options['verbosity'] > 0:
            self.stdout.write('micro P %.3f R %.3f F1 %.3f over %d paper(s) -> %s'
                              % (micro.precision, micro.recall, micro.f1, len(truth), out))
