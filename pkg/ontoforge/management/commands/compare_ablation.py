# -*- coding: utf-8 -*-
from ...evaluation import compare_ablation, load_record_schema, paper_files, read_records
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = ('Compare the step structure of a full run with a no-feedback run over the same papers; '
            'prints per-paper proxy counts, mean deltas and bootstrap intervals as JSON.')

    def add_arguments(self, parser):
        parser.add_argument('--full', required=True, help='directory of <doi>.ttl or <doi>.json from the full run')
        parser.add_argument('--ablated', required=True, help='directory of the same papers from the ablated run')
        parser.add_argument('--schema', required=True, help='step record schema')
        parser.add_argument('--number-slot', default='step_number')
        parser.add_argument('--group-slot', help='slot that separates the syntheses of one paper')
        parser.add_argument('--resamples', type=int, help='bootstrap resamples (default ONTOFORGE_BOOTSTRAP_RESAMPLES)')
        parser.add_argument('--seed', type=int, default=0)

    def run(self, full, ablated, schema, number_slot, group_slot, resamples, seed, **options):
        record_schema = load_record_schema(schema)

        def records(directory):
            return dict((doi, read_records(path, record_schema)) for doi, path in paper_files(directory).items())

        comparison = compare_ablation(records(full), records(ablated), record_schema, number_slot=number_slot,
                                      group_slot=group_slot, resamples=resamples, seed=seed)
        self.write_json(comparison.to_dict())
