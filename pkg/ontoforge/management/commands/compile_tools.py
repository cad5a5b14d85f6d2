# -*- coding: utf-8 -*-
import os

from ...compiler import check_plan, compile_tools, generate_plan, manifest_json
from ...schema import load_schema
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = 'Compile a T-Box into a tool manifest and a staged extraction plan.'

    def add_arguments(self, parser):
        parser.add_argument('--tbox', required=True, help='T-Box Turtle file')
        parser.add_argument('--out', required=True, help='output directory for manifest.json and plan.json')
        parser.add_argument('--extends', dest='main_tbox', help='main T-Box the --tbox extension links into')

    def run(self, tbox, out, main_tbox=None, **options):
        schema = load_schema(tbox, main=load_schema(main_tbox) if main_tbox else None)
        toolset = compile_tools(schema)
        plan = check_plan(generate_plan(schema, toolset), toolset)
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, 'manifest.json'), 'w', encoding='utf-8') as f:
            f.write(manifest_json(toolset))
        with open(os.path.join(out, 'plan.json'), 'w', encoding='utf-8') as f:
            f.write(plan.to_json())
        if options['verbosity'] > 0:
            self.stdout.write('%d tools, %d iterations -> %s' % (len(toolset), len(plan.iterations), out))
