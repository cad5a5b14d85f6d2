from django.conf import settings

if getattr(settings, 'TESTING_ONTOFORGE', False):
    import json
    import unittest

    from pydantic import ValidationError

    from ontoforge.compiler import (COMPLETION, CREATE_QUANTITY, CROSS_DOCUMENT, ENTITY_CREATION, ENUM, INTEGER,
                                    IRI, LINKING, MAIN_STORE, NUMBER, QUERY, STRING, CompileError, Plan, PlanError,
                                    check_plan, compile_tools, emit_manifest, generate_plan, manifest_json)
    from ontoforge.schema import extract_schema
    from ontoforge.turtle import parse_turtle
    from ontoforge.tests import FixtureMixin

    class TestCompileTools(FixtureMixin, unittest.TestCase):

        def setUp(self):
            super(TestCompileTools, self).setUp()
            self.schema = self.build_schema()
            self.toolset = compile_tools(self.schema)

        def test_tool_inventory(self):
            self.assertEqual([
                'check_existing_heat_chill_step', 'check_existing_step', 'check_existing_synthesis',
                'check_existing_temperature', 'create_heat_chill_step', 'create_step', 'create_synthesis',
                'create_temperature', 'create_temperature_quantity', 'link_has_next_step', 'link_has_step',
                'link_has_temperature', 'set_has_numeric_value', 'set_has_step_number', 'set_has_unit',
                'set_has_yield',
            ], self.toolset.names)
            self.assertEqual(16, len(self.toolset))

        def test_groups(self):
            self.assertEqual(5, len(self.toolset.by_group(ENTITY_CREATION)))
            self.assertEqual(4, len(self.toolset.by_group(QUERY)))
            self.assertEqual(3, len(self.toolset.by_group(LINKING)))
            self.assertEqual(4, len(self.toolset.by_group(COMPLETION)))
            self.assertTrue(self.toolset.get('check_existing_step').is_query)

        def test_create_tool_carries_inherited_attributes(self):
            tool = self.toolset.get('create_heat_chill_step')
            self.assertEqual(['doc_id', 'label', 'has_step_number'], [a.name for a in tool.arguments])
            self.assertEqual(INTEGER, tool.argument('has_step_number').value_kind)
            self.assertFalse(tool.argument('has_step_number').required)
            self.assertEqual(self.ex('hasStepNumber'), tool.argument('has_step_number').binding)
            self.assertEqual(self.ex('HeatChillStep'), tool.binding)

        def test_quantity_tool(self):
            tool = self.toolset.get('create_temperature_quantity')
            self.assertEqual(CREATE_QUANTITY, tool.operation)
            self.assertEqual(NUMBER, tool.argument('value').value_kind)
            self.assertEqual(ENUM, tool.argument('unit').value_kind)
            self.assertEqual(('degree Celsius', 'kelvin'), tool.argument('unit').labels)
            schema = tool.input_schema()
            self.assertEqual(['value', 'unit'], schema['required'])
            self.assertEqual(['degree Celsius', 'kelvin'], schema['properties']['unit']['enum'])

        def test_link_and_set_tools(self):
            link = self.toolset.get('link_has_temperature')
            self.assertEqual(['subject_iri', 'object_iri'], [a.name for a in link.arguments])
            self.assertEqual(IRI, link.argument('object_iri').value_kind)
            self.assertEqual({'type': 'string', 'format': 'iri'},
                             dict((k, v) for k, v in link.input_schema()['properties']['subject_iri'].items()
                                  if k != 'description'))
            unit = self.toolset.get('set_has_unit')
            self.assertEqual(ENUM, unit.argument('value').value_kind)
            self.assertEqual(STRING, self.toolset.get('create_step').argument('label').value_kind)

        def test_comments_reach_tool_docs(self):
            self.assertIn('label it after its product', self.toolset.get('create_synthesis').doc)
            self.assertIn('consecutive steps', self.toolset.get('link_has_next_step').doc)

        def test_manifest_is_deterministic(self):
            first = manifest_json(self.toolset)
            second = manifest_json(compile_tools(self.build_schema()))
            self.assertEqual(first, second)
            manifest = json.loads(first)
            self.assertEqual(self.schema.fingerprint, manifest['schema_fingerprint'])
            self.assertEqual(self.toolset.names, [t['name'] for t in manifest['tools']])
            self.assertEqual(emit_manifest(self.toolset), manifest)

        def test_tool_name_collision(self):
            tbox = parse_turtle('@prefix ex: <https://example.org/a#> .\n'
                                '@prefix ey: <https://example.org/b#> .\n'
                                '@prefix owl: <http://www.w3.org/2002/07/owl#> .\n'
                                'ex:Step a owl:Class .\n'
                                'ey:Step a owl:Class .\n')
            with self.assertRaises(CompileError):
                compile_tools(extract_schema(tbox))

        def test_argument_collision(self):
            tbox = parse_turtle('@prefix ex: <https://example.org/a#> .\n'
                                '@prefix owl: <http://www.w3.org/2002/07/owl#> .\n'
                                '@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n'
                                'ex:Step a owl:Class .\n'
                                'ex:label a owl:DatatypeProperty ; rdfs:domain ex:Step .\n')
            with self.assertRaises(CompileError):
                compile_tools(extract_schema(tbox))

    class TestPlan(FixtureMixin, unittest.TestCase):

        def setUp(self):
            super(TestPlan, self).setUp()
            self.schema = self.build_schema()
            self.toolset = compile_tools(self.schema)
            self.plan = generate_plan(self.schema, self.toolset)

        def test_three_iterations(self):
            self.assertEqual([1, 2, 3], [i.id for i in self.plan.iterations])
            first, second, third = self.plan.iterations
            self.assertEqual([ENTITY_CREATION], first.tool_groups)
            self.assertEqual(['create_synthesis'], first.required_tools)
            self.assertEqual([str(self.ex('Synthesis'))], first.entity_scope)
            self.assertEqual([ENTITY_CREATION, COMPLETION], second.tool_groups)
            self.assertIn('create_temperature_quantity', second.required_tools)
            self.assertIn('set_has_unit', second.required_tools)
            self.assertNotIn('create_synthesis', second.required_tools)
            self.assertEqual([LINKING, COMPLETION], third.tool_groups)
            self.assertEqual(['link_has_next_step', 'link_has_step', 'link_has_temperature'], third.required_tools)

        def test_guidance_is_carried(self):
            self.assertIn('label it after its product', self.plan.iterations[0].extraction_instruction)
            self.assertIn('consecutive steps', self.plan.iterations[2].extraction_instruction)

        def test_plan_round_trips_through_json(self):
            text = self.plan.to_json()
            self.assertEqual(text, generate_plan(self.build_schema(), self.toolset).to_json())
            self.assertEqual(self.plan, Plan.model_validate_json(text))
            self.assertEqual(self.schema.fingerprint, self.plan.schema_fingerprint)

        def test_iteration_ids_must_be_sequential(self):
            data = json.loads(self.plan.to_json())
            data['iterations'][1]['id'] = 5
            with self.assertRaises(ValidationError):
                Plan.model_validate(data)

        def test_check_plan(self):
            data = json.loads(self.plan.to_json())
            data['iterations'][2]['tool_groups'] = ['linking', 'teleport']
            with self.assertRaises(PlanError):
                check_plan(Plan.model_validate(data), self.toolset)
            data = json.loads(self.plan.to_json())
            data['iterations'][0]['required_tools'] = ['create_reactor']
            with self.assertRaises(PlanError):
                check_plan(Plan.model_validate(data), self.toolset)

        def test_no_top_entity(self):
            tbox = parse_turtle('@prefix ex: <https://example.org/a#> .\n'
                                '@prefix owl: <http://www.w3.org/2002/07/owl#> .\n'
                                'ex:Step a owl:Class .\n')
            schema = extract_schema(tbox)
            with self.assertRaises(PlanError):
                generate_plan(schema, compile_tools(schema))

    class TestExtensionTools(FixtureMixin, unittest.TestCase):

        def setUp(self):
            super(TestExtensionTools, self).setUp()
            self.schema = self.build_extension_schema()
            self.toolset = compile_tools(self.schema)

        def test_tool_inventory(self):
            self.assertEqual([
                'check_existing_characterisation', 'check_existing_device', 'check_existing_heat_chill_step',
                'check_existing_step', 'check_existing_synthesis', 'check_existing_temperature',
                'create_characterisation', 'create_device', 'link_characterises', 'link_uses_device',
                'set_has_melting_point',
            ], self.toolset.names)

        def test_main_classes_are_lookup_only(self):
            self.assertIsNone(self.toolset.get('create_synthesis'))
            self.assertIn('of the main A-Box', self.toolset.get('check_existing_synthesis').doc)
            self.assertNotIn('main A-Box', self.toolset.get('check_existing_device').doc)

        def test_links_into_the_main_schema_form_their_own_group(self):
            self.assertEqual(['link_characterises'], [t.name for t in self.toolset.by_group(CROSS_DOCUMENT)])
            self.assertEqual(['link_uses_device'], [t.name for t in self.toolset.by_group(LINKING)])

        def test_fourth_iteration(self):
            plan = generate_plan(self.schema, self.toolset)
            self.assertEqual([1, 2, 3, 4], [i.id for i in plan.iterations])
            self.assertEqual(['create_characterisation'], plan.iterations[0].required_tools)
            self.assertEqual(['create_device', 'set_has_melting_point'], plan.iterations[1].required_tools)
            self.assertEqual(['link_uses_device'], plan.iterations[2].required_tools)
            last = plan.iterations[3]
            self.assertEqual([CROSS_DOCUMENT], last.tool_groups)
            self.assertEqual(['link_characterises'], last.required_tools)
            self.assertIn(MAIN_STORE, last.inputs)
            self.assertIn('The synthesis whose product was characterised.', last.extraction_instruction)
            self.assertIs(plan, check_plan(plan, self.toolset))

        def test_plain_schemas_keep_three_iterations(self):
            schema = self.build_schema()
            self.assertEqual(3, len(generate_plan(schema, compile_tools(schema)).iterations))
