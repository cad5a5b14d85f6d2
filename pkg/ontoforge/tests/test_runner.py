from django.conf import settings

if getattr(settings, 'TESTING_ONTOFORGE', False):
    import os
    import random
    import unittest

    from pydantic import ValidationError

    from ontoforge.compiler import compile_tools, generate_plan
    from ontoforge.endpoint import ServerState
    from ontoforge.evaluation import load_record_schema, match_records, project_records, score
    from ontoforge.runner import (OK, REPAIRED, SKIPPED_POLICY, SKIPPED_UNBOUND, UNREPAIRED, EndpointError,
                                  LocalEndpoint, RepairTable, RepairTableError, SubprocessEndpoint, Trace, TraceError,
                                  apply_repair, local_endpoint, run_plan)
    from ontoforge.runtime import Session, validate_graph
    from ontoforge.tests import SI_DOC_ID, FixtureMixin

    REJECTED_UNIT = {
        'ok': False,
        'error_type': 'OntologyConstraintViolation',
        'field': 'unit',
        'message': "Unit value 'C' is not permitted by the ontology.",
        'allowed_values': ['degree Celsius', 'kelvin'],
        'retryable': True,
        'status': 'rejected',
    }

    class RunnerTestCase(FixtureMixin, unittest.TestCase):

        def setUp(self):
            super(RunnerTestCase, self).setUp()
            schema = self.build_schema()
            self.plan = generate_plan(schema, compile_tools(schema))
            self.trace = Trace.model_validate(self.load_json_fixture('repair_trace.json'))
            self.repair = RepairTable.model_validate(self.load_json_fixture('repairs.json'))

        def endpoint(self, workdir=None, feedback_enabled=True):
            endpoint = local_endpoint(self.fixture_path('synthesis.ttl'), SI_DOC_ID, workdir=workdir,
                                      feedback_enabled=feedback_enabled)
            self.addCleanup(endpoint.close)
            return endpoint

        def trace_of(self, *steps):
            return Trace.model_validate({'steps': list(steps)})

    class TestApplyRepair(unittest.TestCase):

        def setUp(self):
            super(TestApplyRepair, self).setUp()
            self.repair = RepairTable({'unit': {'C': 'degree Celsius', 'kelvin': 'kelvin', 'F': 'fahrenheit'}})

        def test_alias_replaces_the_reported_field(self):
            args = {'value': 120, 'unit': 'C'}
            self.assertEqual({'value': 120, 'unit': 'degree Celsius'}, apply_repair(REJECTED_UNIT, args, self.repair))
            self.assertEqual({'value': 120, 'unit': 'C'}, args)

        def test_no_repair(self):
            self.assertIsNone(apply_repair(dict(REJECTED_UNIT, retryable=False), {'unit': 'C'}, self.repair))
            self.assertIsNone(apply_repair(dict(REJECTED_UNIT, field=None), {'unit': 'C'}, self.repair))
            self.assertIsNone(apply_repair(REJECTED_UNIT, {'unit': 'Celsius'}, self.repair))
            self.assertIsNone(apply_repair(REJECTED_UNIT, {'unit': 3}, self.repair))
            # identity aliases and targets outside allowed_values are never sent
            self.assertIsNone(apply_repair(REJECTED_UNIT, {'unit': 'kelvin'}, self.repair))
            self.assertIsNone(apply_repair(REJECTED_UNIT, {'unit': 'F'}, self.repair))
            self.assertIsNone(apply_repair(REJECTED_UNIT, {}, self.repair))

    class TestRunPlan(RunnerTestCase):

        def test_golden_repair_trace(self):
            workdir = self.build_workdir()
            report = run_plan(self.plan, self.trace, self.repair, self.endpoint(workdir))
            self.assertEqual('done', report.final_status)
            self.assertEqual((5, 4, 1, 1, 1, 0), (report.calls_total, report.calls_ok, report.violations,
                                                  report.repairs_attempted, report.repairs_succeeded,
                                                  report.violations_unrepaired))
            self.assertEqual([OK, OK, REPAIRED, OK, OK], [s.status for s in report.steps])
            self.assertEqual(2, report.steps[2].attempts)
            self.assertEqual(1, report.per_iteration[2].violations)
            self.assertEqual(0, report.per_iteration[3].violations)
            with open(os.path.join(workdir, SI_DOC_ID + '.jsonl'), encoding='utf-8') as f:
                self.assertEqual(self.read_fixture('repair_trace.jsonl'), f.read())
            self.assertTrue(os.path.exists(os.path.join(workdir, SI_DOC_ID + '.ttl')))

        def test_without_repairs(self):
            report = run_plan(self.plan, self.trace, RepairTable({}), self.endpoint())
            self.assertEqual([OK, OK, UNREPAIRED, OK, SKIPPED_UNBOUND], [s.status for s in report.steps])
            self.assertEqual((4, 3, 1, 1, 1), (report.calls_total, report.calls_ok, report.violations,
                                               report.violations_unrepaired, report.steps_skipped))
            self.assertEqual('done', report.final_status)

        def test_retry_budget(self):
            report = run_plan(self.plan, self.trace, self.repair, self.endpoint(), retry_budget=1)
            self.assertEqual(UNREPAIRED, report.steps[2].status)
            self.assertEqual(0, report.repairs_attempted)

        def test_policy_violations_are_skipped(self):
            trace = self.trace_of(
                {'iteration_id': 1, 'tool': 'create_step', 'args': {'doc_id': SI_DOC_ID, 'label': 'early'}},
                {'iteration_id': 1, 'tool': 'check_existing_step', 'args': {'label': 'early'}},
                {'iteration_id': 1, 'tool': 'create_synthesis', 'args': {'doc_id': SI_DOC_ID, 'label': 's'},
                 'bind': 'syn'},
                {'iteration_id': 2, 'tool': 'link_has_step', 'args': {'subject_iri': '$syn', 'object_iri': '$syn'}},
            )
            endpoint = self.endpoint()
            report = run_plan(self.plan, trace, self.repair, endpoint)
            self.assertEqual([SKIPPED_POLICY, OK, OK, SKIPPED_POLICY], [s.status for s in report.steps])
            self.assertEqual(2, report.policy_violations)
            self.assertEqual(1, report.per_iteration[1].policy_violations)
            self.assertEqual(2, len(endpoint.state.session.graph))
            self.assertEqual('incomplete', report.final_status)
            self.assertEqual(['CardinalityViolation'], [r['error_type'] for r in report.final_reports])

        def test_empty_trace(self):
            report = run_plan(self.plan, Trace(), self.repair, self.endpoint())
            self.assertEqual('done', report.final_status)
            self.assertEqual(0, report.calls_total)

        def test_bad_traces(self):
            for step in ({'iteration_id': 4, 'tool': 'create_step', 'args': {}},
                         {'iteration_id': 1, 'tool': 'create_reactor', 'args': {}}):
                with self.assertRaises(TraceError):
                    run_plan(self.plan, self.trace_of(step), self.repair, self.endpoint())
            with self.assertRaises(ValidationError):
                self.trace_of({'iteration_id': 2, 'tool': 'create_step'}, {'iteration_id': 1, 'tool': 'create_step'})

        def test_repair_table_is_checked(self):
            for table in ({'unit': {'C': 'celsius'}}, {'colour': {'red': 'Red'}}):
                with self.assertRaises(RepairTableError):
                    run_plan(self.plan, self.trace, RepairTable(table), self.endpoint())

        def test_endpoint_errors(self):
            endpoint = LocalEndpoint(ServerState(self.build_session()))
            with self.assertRaises(EndpointError) as ctx:
                endpoint.request('tools/list')
            self.assertEqual(-32002, ctx.exception.code)

    class TestSubprocessEndpoint(RunnerTestCase):

        def test_golden_trace_over_stdio(self):
            workdir = self.build_workdir()
            with SubprocessEndpoint(self.fixture_path('synthesis.ttl'), SI_DOC_ID, workdir) as endpoint:
                endpoint.initialize()
                report = run_plan(self.plan, self.trace, self.repair, endpoint)
            self.assertEqual('done', report.final_status)
            self.assertEqual(1, report.repairs_succeeded)
            with open(os.path.join(workdir, SI_DOC_ID + '.jsonl'), encoding='utf-8') as f:
                self.assertEqual(self.read_fixture('repair_trace.jsonl'), f.read())

    UNITS = ['degree Celsius', 'kelvin', 'C', 'K', '°C']
    CANONICAL = {'C': 'degree Celsius', 'K': 'kelvin', '°C': 'degree Celsius'}

    def _synthetic_trace(rng):
        '''(trace, gold step records) for one made-up procedure'''
        steps = [{'iteration_id': 1, 'tool': 'create_synthesis', 'bind': 'syn',
                  'args': {'doc_id': SI_DOC_ID, 'label': 'product %d' % rng.randrange(1000)}}]
        links, gold = [], []
        count = rng.randrange(1, 5)
        # at least one unit the endpoint rejects and the repair table fixes
        repairable = rng.randrange(1, count + 1)
        for number, value in enumerate(rng.sample(range(20, 400), count), 1):
            unit = rng.choice(sorted(CANONICAL)) if number == repairable else rng.choice(UNITS)
            label = 'Step %d' % number
            steps.append({'iteration_id': 2, 'tool': 'create_heat_chill_step', 'bind': 'step%d' % number,
                          'args': {'doc_id': SI_DOC_ID, 'label': label, 'has_step_number': number}})
            steps.append({'iteration_id': 2, 'tool': 'create_temperature_quantity', 'bind': 'temp%d' % number,
                          'args': {'value': value, 'unit': unit}})
            links.append({'iteration_id': 3, 'tool': 'link_has_step',
                          'args': {'subject_iri': '$syn', 'object_iri': '$step%d' % number}})
            links.append({'iteration_id': 3, 'tool': 'link_has_temperature',
                          'args': {'subject_iri': '$step%d' % number, 'object_iri': '$temp%d' % number}})
            gold.append({'step_number': str(number), 'step_label': label, 'temperature_value': str(value),
                         'temperature_unit': CANONICAL.get(unit, unit)})
        return Trace.model_validate({'steps': steps + links}), gold

    class TestFeedbackAblation(RunnerTestCase):

        def replay(self, trace, gold, feedback_enabled):
            '''(recall, post-hoc violation count) of one trace'''
            endpoint = self.endpoint(feedback_enabled=feedback_enabled)
            report = run_plan(self.plan, trace, self.repair, endpoint)
            self.assertEqual('done', report.final_status)
            graph = endpoint.state.session.graph
            records_schema = load_record_schema(self.fixture_path('steps.schema.json'))
            counts = match_records(project_records(graph, records_schema), gold, records_schema)
            return score(counts).recall, len(validate_graph(graph, self.build_schema()))

        def test_feedback_raises_recall_and_removes_violations(self):
            rng = random.Random(20)
            lower = 0
            for n in range(20):
                trace, gold = _synthetic_trace(rng)
                recall, violations = self.replay(trace, gold, True)
                ablated_recall, ablated_violations = self.replay(trace, gold, False)
                self.assertEqual((1, 0), (recall, violations), 'trace %d' % n)
                self.assertGreater(ablated_violations, violations, 'trace %d' % n)
                if ablated_recall < recall:
                    lower += 1
            self.assertGreaterEqual(lower, 18)

    class TestSessionHelpers(FixtureMixin, unittest.TestCase):

        def test_local_endpoint_wraps_a_session(self):
            endpoint = local_endpoint(self.fixture_path('synthesis.ttl'), SI_DOC_ID)
            self.assertIsInstance(endpoint.state.session, Session)
            self.assertTrue(endpoint.state.initialized)
            self.assertEqual(16, len(endpoint.request('tools/list')['tools']))
