# -*- coding: utf-8 -*-
import glob
import json
import logging
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import requests
from Levenshtein import distance as levenshtein_distance

from .conf import app_settings
from .rdf import Graph, Literal, OWL, RDF, RDFS, URIRef, is_string_literal
from .turtle import load_turtle, save_turtle
from .utils import canonical_hash, dump_json

logger = logging.getLogger(__name__)

SAMEAS = 'sameas'
REWRITE = 'rewrite'
MODES = (SAMEAS, REWRITE)

_DASHES = re.compile('[‐‑‒–—―−﹘﹣－]')
# brackets are part of chemical names, so only these are stripped
_SURROUNDING = '.,;:!?"\'‘’“”'


class GroundingException(Exception):
    pass


class ModeError(GroundingException):
    pass


class NetworkError(GroundingException):
    def __init__(self, status, message):
        self.status = status
        self.message = message
        super(NetworkError, self).__init__('%s %s' % (status, message))


class MalformedResults(GroundingException):
    pass


class IndexFileError(GroundingException):
    pass


def normalize_surface(text):
    '''
        grounder-grade normalisation: unify dashes, collapse whitespace,
        strip surrounding punctuation, casefold
    '''
    text = _DASHES.sub('-', text)
    text = ' '.join(text.split())
    text = text.strip(_SURROUNDING).strip()
    return text.casefold()


def _tau(tau):
    if tau is None:
        tau = app_settings.TAU
    return Fraction(str(tau))


@dataclass(frozen=True, order=True)
class LabelEntry:
    label_norm: str
    target_iri: str
    cls: str
    label_raw: str
    predicate: str

    def to_dict(self):
        return {
            'target_iri': self.target_iri,
            'class': self.cls,
            'label_raw': self.label_raw,
            'label_norm': self.label_norm,
            'predicate': self.predicate,
        }


@dataclass(frozen=True)
class LabelIndex:
    entries: Tuple[LabelEntry, ...]
    source_fingerprint: str

    @classmethod
    def from_entries(cls, entries):
        entries = tuple(sorted(set(entries)))
        return cls(entries=entries, source_fingerprint=canonical_hash([e.to_dict() for e in entries]))

    def __len__(self):
        return len(self.entries)

    def to_dict(self):
        return {'entries': [e.to_dict() for e in self.entries], 'source_fingerprint': self.source_fingerprint}


@dataclass(frozen=True)
class Candidate:
    target_iri: str
    score: Fraction
    matched_label: str


@dataclass(frozen=True)
class GroundingPair:
    local_iri: str
    target_iri: str
    score: Fraction
    mode: str

    def to_dict(self):
        return {'local_iri': self.local_iri, 'target_iri': self.target_iri,
                'score': str(self.score), 'mode': self.mode}


@dataclass(frozen=True)
class GroundingMap:
    pairs: Tuple[GroundingPair, ...] = ()

    def __len__(self):
        return len(self.pairs)

    def get(self, local_iri):
        for pair in self.pairs:
            if pair.local_iri == local_iri:
                return pair
        return None

    def to_dict(self):
        return {'pairs': [p.to_dict() for p in self.pairs]}


def _instances(graph, classes):
    found = set()
    for cls in classes:
        found |= set(s for s in graph.subjects(RDF.type, URIRef(cls)) if isinstance(s, URIRef))
    return sorted(found)


def discover_label_predicates(reference, classes):
    '''
        [(predicate, coverage)], rdfs:label first, then by coverage and IRI
    '''
    instances = _instances(reference, classes)
    if not instances:
        return []
    counts = {}
    for instance in instances:
        for predicate in reference.predicates(instance):
            if any(is_string_literal(o) for o in reference.objects(instance, predicate)):
                counts[predicate] = counts.get(predicate, 0) + 1
    ranked = sorted(((p, Fraction(n, len(instances))) for p, n in counts.items()),
                    key=lambda pair: (pair[0] != RDFS.label, -pair[1], str(pair[0])))
    return ranked


def build_label_index(reference, classes, predicates):
    classes = sorted(str(c) for c in classes)
    entries = []
    for instance in _instances(reference, classes):
        types = sorted(str(t) for t in reference.types(instance) if str(t) in classes)
        for predicate in predicates:
            for value in reference.objects(instance, URIRef(predicate)):
                if not is_string_literal(value):
                    continue
                norm = normalize_surface(str(value))
                if not norm:
                    continue
                entries.append(LabelEntry(label_norm=norm, target_iri=str(instance), cls=types[0],
                                          label_raw=str(value), predicate=str(predicate)))
    index = LabelIndex.from_entries(entries)
    logger.info('built label index: %d entries over %d classes', len(index), len(classes))
    return index


def score(surface_norm, label_norm):
    if surface_norm == label_norm:
        return Fraction(1)
    longest = max(len(surface_norm), len(label_norm))
    return Fraction(longest - levenshtein_distance(surface_norm, label_norm), longest)


def lookup(index, surface, k=None, tau=None):
    if k is None:
        k = app_settings.LOOKUP_K
    if k < 1:
        raise ValueError('k must be a positive integer')
    threshold = _tau(tau)
    norm = normalize_surface(surface)
    if not norm:
        return []
    best = {}
    for entry in index.entries:
        value = score(norm, entry.label_norm)
        if value < threshold:
            continue
        current = best.get(entry.target_iri)
        if current is None or (-value, entry.label_raw) < (-current.score, current.matched_label):
            best[entry.target_iri] = Candidate(entry.target_iri, value, entry.label_raw)
    ranked = sorted(best.values(), key=lambda c: (-c.score, c.target_iri))
    logger.debug('lookup %r: %d candidate(s)', surface, len(ranked))
    return ranked[:k]


def _surfaces(graph, instance, alt_predicates):
    surfaces = set()
    for predicate in [RDFS.label] + [URIRef(p) for p in alt_predicates]:
        surfaces |= set(str(o) for o in graph.objects(instance, predicate) if isinstance(o, Literal))
    return sorted(surfaces)


def ground_graph(graph, index, classes, mode, tau=None, k=None, alt_predicates=None):
    '''
        (new graph, GroundingMap); the input graph is not modified
    '''
    if mode not in MODES:
        raise ModeError('unknown grounding mode %r (expected one of %s)' % (mode, ', '.join(MODES)))
    if alt_predicates is None:
        alt_predicates = app_settings.ALT_LABEL_PREDICATES
    pairs = []
    for instance in _instances(graph, classes):
        candidates = {}
        for surface in _surfaces(graph, instance, alt_predicates):
            for candidate in lookup(index, surface, k=k, tau=tau):
                current = candidates.get(candidate.target_iri)
                if current is None or candidate.score > current.score:
                    candidates[candidate.target_iri] = candidate
        if not candidates:
            logger.warning('no grounding candidate for %s', instance)
            continue
        chosen = min(candidates.values(), key=lambda c: (-c.score, c.target_iri))
        if chosen.target_iri == str(instance):
            continue
        pairs.append(GroundingPair(str(instance), chosen.target_iri, chosen.score, mode))
    mapping = GroundingMap(tuple(sorted(pairs, key=lambda p: p.local_iri)))

    if mode == SAMEAS:
        out = graph.copy()
        for pair in mapping.pairs:
            out.add((URIRef(pair.local_iri), OWL.sameAs, URIRef(pair.target_iri)))
    else:
        substitute = dict((URIRef(p.local_iri), URIRef(p.target_iri)) for p in mapping.pairs)
        out = Graph(prefixes=graph.prefixes)
        for s, p, o in graph:
            out.add((substitute.get(s, s), p, substitute.get(o, o)))
    logger.info('grounded %d of %d instance(s) (%s)', len(mapping), len(_instances(graph, classes)), mode)
    return out, mapping


def ground_directory(in_dir, index, classes, mode, out_dir, tau=None, k=None):
    '''
        batch variant: every *.ttl of in_dir, written to out_dir with a
        <name>.grounding.json sidecar
    '''
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    for path in sorted(glob.glob(os.path.join(in_dir, '*.ttl'))):
        name = os.path.basename(path)
        grounded, mapping = ground_graph(load_turtle(path), index, classes, mode, tau=tau, k=k)
        save_turtle(grounded, os.path.join(out_dir, name))
        sidecar = os.path.join(out_dir, '%s.grounding.json' % os.path.splitext(name)[0])
        with open(sidecar, 'w', encoding='utf-8') as f:
            f.write(dump_json(mapping.to_dict()))
        results[name] = mapping
    return results


def save_index(index, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dump_json(index.to_dict()))
    return path


def load_index(path):
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
            entries = [LabelEntry(label_norm=e['label_norm'], target_iri=e['target_iri'], cls=e['class'],
                                  label_raw=e['label_raw'], predicate=e['predicate']) for e in data['entries']]
            fingerprint = data['source_fingerprint']
        except (ValueError, KeyError, TypeError) as e:
            raise IndexFileError('%s is not a label index: %s' % (path, e))
    index = LabelIndex.from_entries(entries)
    if index.source_fingerprint != fingerprint:
        raise IndexFileError('%s: fingerprint does not match its entries' % path)
    return index


LABEL_QUERY = '''SELECT ?instance ?label WHERE {
  ?instance a <%s> .
  ?instance <%s> ?label .
  FILTER(isLiteral(?label))
}'''


def _binding_term(binding, name):
    term = binding.get(name)
    if not isinstance(term, dict) or 'type' not in term or 'value' not in term:
        raise MalformedResults('binding lacks variable ?%s' % name)
    return term


def fetch_labels_from_endpoint(endpoint_url, classes, predicates, timeout=None):
    '''
        one SELECT per (class, predicate) over the SPARQL protocol, then
        build_label_index over the returned bindings
    '''
    if timeout is None:
        timeout = app_settings.SPARQL_TIMEOUT
    graph = Graph()
    for cls in sorted(str(c) for c in classes):
        for predicate in sorted(str(p) for p in predicates):
            query = LABEL_QUERY % (cls, predicate)
            try:
                response = requests.post(endpoint_url, data={'query': query},
                                         headers={'Accept': 'application/sparql-results+json'},
                                         timeout=timeout)
            except requests.RequestException as e:
                raise NetworkError(None, str(e))
            if response.status_code != 200:
                raise NetworkError(response.status_code, response.text[:200])
            try:
                bindings = response.json()['results']['bindings']
            except (ValueError, KeyError, TypeError):
                raise MalformedResults('%s did not return SPARQL JSON results' % endpoint_url)
            if not isinstance(bindings, list):
                raise MalformedResults('"bindings" is not a list')
            for binding in bindings:
                if not isinstance(binding, dict):
                    raise MalformedResults('binding is not an object')
                instance, label = _binding_term(binding, 'instance'), _binding_term(binding, 'label')
                if instance['type'] != 'uri' or label['type'] not in ('literal', 'typed-literal'):
                    continue
                if 'xml:lang' in label:
                    value = Literal(label['value'], lang=label['xml:lang'])
                elif 'datatype' in label:
                    value = Literal(label['value'], datatype=URIRef(label['datatype']))
                else:
                    value = Literal(label['value'])
                graph.add((URIRef(instance['value']), RDF.type, URIRef(cls)))
                graph.add((URIRef(instance['value']), URIRef(predicate), value))
            logger.debug('fetched %d binding(s) for %s / %s', len(bindings), cls, predicate)
    return build_label_index(graph, classes, predicates)
