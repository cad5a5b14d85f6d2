# -*- coding: utf-8 -*-
from ...compiler import Plan
from ...runner import LocalEndpoint, RepairTable, SubprocessEndpoint, Trace, run_plan
from ...endpoint import ServerState
from ..base import OntoforgeCommand, read_model


class Command(OntoforgeCommand):
    help = 'Replay a tool-call trace against a tool endpoint, plan iteration by plan iteration.'

    def add_arguments(self, parser):
        parser.add_argument('--plan', required=True)
        parser.add_argument('--trace', required=True)
        parser.add_argument('--repairs', help='repair table JSON; none means no repairs')
        parser.add_argument('--tbox', required=True)
        parser.add_argument('--doc-id', required=True)
        parser.add_argument('--workdir', required=True)
        parser.add_argument('--no-feedback', action='store_true', help='forwarded to the endpoint')
        parser.add_argument('--in-process', action='store_true',
                            help='run the endpoint in this process instead of spawning serve')

    def run(self, plan, trace, repairs, tbox, doc_id, workdir, no_feedback, in_process, **options):
        plan = read_model(Plan, plan)
        trace = read_model(Trace, trace)
        repair = read_model(RepairTable, repairs) if repairs else RepairTable({})
        if in_process:
            endpoint = LocalEndpoint(ServerState.from_tbox(tbox, doc_id, workdir=workdir,
                                                           feedback_enabled=not no_feedback))
        else:
            endpoint = SubprocessEndpoint(tbox, doc_id, workdir, feedback_enabled=not no_feedback,
                                          settings_module=options.get('settings'))
        with endpoint:
            endpoint.initialize()
            report = run_plan(plan, trace, repair, endpoint)
        self.write_json(report.model_dump(mode='json'))
