from django.conf import settings

if getattr(settings, 'TESTING_ONTOFORGE', False):
    import json
    import os
    import unittest
    from fractions import Fraction
    from unittest import mock

    import requests
    from django.test import override_settings

    from ontoforge.grounding import (REWRITE, SAMEAS, IndexFileError, MalformedResults, ModeError, NetworkError,
                                     build_label_index, discover_label_predicates, fetch_labels_from_endpoint,
                                     ground_directory, ground_graph, load_index, lookup, normalize_surface,
                                     save_index, score)
    from ontoforge.rdf import Graph, Literal, OWL, RDF, RDFS, URIRef
    from ontoforge.turtle import load_turtle, save_turtle
    from ontoforge.tests import FixtureMixin

    REF = 'https://example.org/reference/'
    SKOS_ALT = 'http://www.w3.org/2004/02/skos/core#altLabel'
    SPECIES = REF + 'Species'
    LOCAL = 'https://example.org/kg/10.1039.C5DT04764A/'
    CHEM = 'https://example.org/synthesis#Chemical'
    USES = URIRef('https://example.org/synthesis#uses')

    def local(name):
        return URIRef(LOCAL + name)

    def local_graph():
        graph = Graph()
        for name, label in (('Chemical_1', 'Methanol'), ('Chemical_2', 'DMF'), ('Chemical_3', 'unobtainium')):
            graph.add((local(name), RDF.type, URIRef(CHEM)))
            graph.add((local(name), RDFS.label, Literal(label)))
        graph.add((local('Step_1'), USES, local('Chemical_1')))
        graph.add((local('Step_1'), USES, local('Chemical_2')))
        return graph

    class GroundingTestCase(FixtureMixin, unittest.TestCase):

        def setUp(self):
            super(GroundingTestCase, self).setUp()
            self.reference = load_turtle(self.fixture_path('species.ttl'))
            self.index = build_label_index(self.reference, [SPECIES], [str(RDFS.label), SKOS_ALT])

    class TestNormalisation(unittest.TestCase):

        def test_normalize_surface(self):
            self.assertEqual('n,n-dimethylformamide', normalize_surface(' N,N–Dimethylformamide. '))
            self.assertEqual('vanadium(v) oxide', normalize_surface('"Vanadium(V)  oxide"'))
            self.assertEqual('', normalize_surface(' ;. '))

        def test_score(self):
            self.assertEqual(Fraction(1), score('methanol', 'methanol'))
            self.assertEqual(Fraction(7, 8), score('ethanoll', 'ethanol'))
            self.assertEqual(Fraction(0), score('abc', 'xyz'))

    class TestIndex(GroundingTestCase):

        def test_entries(self):
            self.assertEqual(8, len(self.index))
            dmf = [e for e in self.index.entries if e.label_raw == 'DMF'][0]
            self.assertEqual((REF + 'species_2', SPECIES, 'dmf', SKOS_ALT),
                             (dmf.target_iri, dmf.cls, dmf.label_norm, dmf.predicate))

        def test_discover_label_predicates(self):
            ranked = discover_label_predicates(self.reference, [SPECIES])
            self.assertEqual([(RDFS.label, Fraction(1)), (URIRef(SKOS_ALT), Fraction(3, 5))], ranked)
            self.assertEqual([], discover_label_predicates(self.reference, [REF + 'Solvent']))

        def test_save_and_load(self):
            path = os.path.join(self.build_workdir(), 'index.json')
            save_index(self.index, path)
            loaded = load_index(path)
            self.assertEqual(self.index, loaded)
            self.assertEqual(64, len(loaded.source_fingerprint))

        def test_tampered_index(self):
            path = os.path.join(self.build_workdir(), 'index.json')
            save_index(self.index, path)
            with open(path, encoding='utf-8') as f:
                data = json.load(f)
            data['entries'][0]['target_iri'] = REF + 'species_9'
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(data, f)
            with self.assertRaises(IndexFileError):
                load_index(path)
            with open(path, 'w', encoding='utf-8') as f:
                f.write('[]')
            with self.assertRaises(IndexFileError):
                load_index(path)

    class TestLookup(GroundingTestCase):

        def test_exact_match_ranks_first(self):
            candidates = lookup(self.index, 'Methanol')
            self.assertEqual(REF + 'species_3', candidates[0].target_iri)
            self.assertEqual(Fraction(1), candidates[0].score)
            # ethanol is one edit away
            self.assertEqual([REF + 'species_3', REF + 'species_4'], [c.target_iri for c in candidates])

        def test_surrounding_punctuation(self):
            candidates = lookup(self.index, 'N,N-Dimethylformamide.')
            self.assertEqual([(REF + 'species_2', Fraction(1))], [(c.target_iri, c.score) for c in candidates])

        def test_alternative_label(self):
            candidates = lookup(self.index, 'tbab')
            self.assertEqual([(REF + 'species_5', 'TBAB')], [(c.target_iri, c.matched_label) for c in candidates])

        def test_near_miss(self):
            candidates = lookup(self.index, 'ethanoll')
            self.assertEqual([(REF + 'species_4', Fraction(7, 8))], [(c.target_iri, c.score) for c in candidates])

        def test_threshold(self):
            self.assertEqual([], lookup(self.index, 'unobtainium'))
            self.assertEqual([], lookup(self.index, 'ethanoll', tau='0.9'))
            self.assertEqual([], lookup(self.index, ' . '))

        @override_settings(ONTOFORGE_TAU='0.9')
        def test_threshold_from_settings(self):
            self.assertEqual([], lookup(self.index, 'ethanoll'))

        def test_k(self):
            self.assertEqual(1, len(lookup(self.index, 'Methanol', k=1)))
            with self.assertRaises(ValueError):
                lookup(self.index, 'Methanol', k=0)

    class TestGroundGraph(GroundingTestCase):

        def test_sameas(self):
            graph = local_graph()
            grounded, mapping = ground_graph(graph, self.index, [CHEM], SAMEAS)
            self.assertEqual([(str(local('Chemical_1')), REF + 'species_3'),
                              (str(local('Chemical_2')), REF + 'species_2')],
                             [(p.local_iri, p.target_iri) for p in mapping.pairs])
            self.assertEqual(len(graph) + len(mapping), len(grounded))
            self.assertIn((local('Chemical_2'), OWL.sameAs, URIRef(REF + 'species_2')), grounded)
            self.assertEqual(local_graph(), graph)
            self.assertIsNone(mapping.get(str(local('Chemical_3'))))

        def test_rewrite(self):
            grounded, mapping = ground_graph(local_graph(), self.index, [CHEM], REWRITE)
            mapped = set(URIRef(p.local_iri) for p in mapping.pairs)
            for s, p, o in grounded:
                self.assertNotIn(s, mapped)
                self.assertNotIn(o, mapped)
            self.assertEqual({URIRef(REF + 'species_3'), URIRef(REF + 'species_2')},
                             grounded.objects(local('Step_1'), USES))
            self.assertEqual({Literal('Methanol')}, grounded.objects(URIRef(REF + 'species_3'), RDFS.label))
            self.assertEqual('rewrite', mapping.pairs[0].mode)

        def test_alt_label_predicates_on_local_side(self):
            graph = Graph()
            graph.add((local('Chemical_1'), RDF.type, URIRef(CHEM)))
            graph.add((local('Chemical_1'), URIRef(SKOS_ALT), Literal('V2O5')))
            _, mapping = ground_graph(graph, self.index, [CHEM], SAMEAS)
            self.assertEqual(0, len(mapping))
            _, mapping = ground_graph(graph, self.index, [CHEM], SAMEAS, alt_predicates=[SKOS_ALT])
            self.assertEqual(REF + 'species_1', mapping.pairs[0].target_iri)

        def test_unknown_mode(self):
            with self.assertRaises(ModeError):
                ground_graph(local_graph(), self.index, [CHEM], 'merge')

        def test_directory(self):
            workdir = self.build_workdir()
            in_dir, out_dir = os.path.join(workdir, 'in'), os.path.join(workdir, 'out')
            os.makedirs(in_dir)
            save_turtle(local_graph(), os.path.join(in_dir, '10.1039.C5DT04764A.ttl'))
            results = ground_directory(in_dir, self.index, [CHEM], SAMEAS, out_dir)
            self.assertEqual(['10.1039.C5DT04764A.ttl'], list(results))
            with open(os.path.join(out_dir, '10.1039.C5DT04764A.grounding.json'), encoding='utf-8') as f:
                sidecar = json.load(f)
            self.assertEqual(['1', '1'], [p['score'] for p in sidecar['pairs']])
            self.assertEqual(len(local_graph()) + 2, len(load_turtle(os.path.join(out_dir, '10.1039.C5DT04764A.ttl'))))

    def _response(status, payload=None, text=''):
        response = mock.Mock()
        response.status_code = status
        response.text = text
        if isinstance(payload, Exception):
            response.json.side_effect = payload
        else:
            response.json.return_value = payload
        return response

    class TestEndpointFetch(unittest.TestCase):

        @mock.patch('ontoforge.grounding.requests.post')
        def test_bindings_become_an_index(self, post):
            post.return_value = _response(200, {'results': {'bindings': [
                {'instance': {'type': 'uri', 'value': REF + 'species_3'},
                 'label': {'type': 'literal', 'value': 'methanol', 'xml:lang': 'en'}},
                {'instance': {'type': 'bnode', 'value': 'b0'},
                 'label': {'type': 'literal', 'value': 'ignored'}},
            ]}})
            index = fetch_labels_from_endpoint('https://sparql.example.org/', [SPECIES], [str(RDFS.label)])
            self.assertEqual(['methanol'], [e.label_norm for e in index.entries])
            args, kwargs = post.call_args
            self.assertEqual('https://sparql.example.org/', args[0])
            self.assertIn('<%s>' % SPECIES, kwargs['data']['query'])
            self.assertEqual(30, kwargs['timeout'])

        @mock.patch('ontoforge.grounding.requests.post')
        def test_http_failure(self, post):
            post.return_value = _response(503, text='unavailable')
            with self.assertRaises(NetworkError) as ctx:
                fetch_labels_from_endpoint('https://sparql.example.org/', [SPECIES], [str(RDFS.label)])
            self.assertEqual(503, ctx.exception.status)
            post.side_effect = requests.ConnectionError('refused')
            with self.assertRaises(NetworkError):
                fetch_labels_from_endpoint('https://sparql.example.org/', [SPECIES], [str(RDFS.label)])

        @mock.patch('ontoforge.grounding.requests.post')
        def test_malformed_results(self, post):
            for payload in (ValueError('no json'), {'head': {}}, {'results': {'bindings': {}}},
                            {'results': {'bindings': [{'instance': {'type': 'uri'}}]}}):
                post.return_value = _response(200, payload)
                with self.assertRaises(MalformedResults):
                    fetch_labels_from_endpoint('https://sparql.example.org/', [SPECIES], [str(RDFS.label)])
