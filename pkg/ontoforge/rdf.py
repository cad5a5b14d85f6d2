# -*- coding: utf-8 -*-
import logging
import re
from collections import namedtuple

from rdflib import BNode, Literal, URIRef
from rdflib import Graph as RdflibGraph
from rdflib.namespace import OWL, RDF, RDFS, XSD

from .conf import app_settings
from .utils import normalize_label

logger = logging.getLogger(__name__)

__all__ = [
    'BNode', 'Literal', 'URIRef', 'OWL', 'RDF', 'RDFS', 'XSD',
    'Triple', 'Graph', 'MintState', 'mint_iri', 'find_by_type_and_label',
]


class RdfException(Exception):
    pass


class InvalidIri(RdfException):
    pass


class InvalidDocId(RdfException):
    pass


class InvalidLocalName(RdfException):
    pass


class DatatypeError(RdfException):
    def __init__(self, lexical, datatype):
        self.lexical = lexical
        self.datatype = datatype
        super(DatatypeError, self).__init__("'%s' is not a valid %s lexical form" % (lexical, datatype))


Triple = namedtuple('Triple', 'subject predicate object')

_INTEGER = r'[+-]?[0-9]+'
_DECIMAL = r'[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)'
_DOUBLE = r'([+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?|[+-]?INF|NaN)'

LEXICAL_GRAMMARS = {
    XSD.integer: re.compile(_INTEGER + r'\Z'),
    XSD.int: re.compile(_INTEGER + r'\Z'),
    XSD.long: re.compile(_INTEGER + r'\Z'),
    XSD.short: re.compile(_INTEGER + r'\Z'),
    XSD.nonNegativeInteger: re.compile(r'(\+?[0-9]+|-0+)\Z'),
    XSD.positiveInteger: re.compile(r'\+?0*[1-9][0-9]*\Z'),
    XSD.decimal: re.compile(_DECIMAL + r'\Z'),
    XSD.double: re.compile(_DOUBLE + r'\Z'),
    XSD.float: re.compile(_DOUBLE + r'\Z'),
    XSD.boolean: re.compile(r'(true|false|1|0)\Z'),
}

INTEGER_DATATYPES = frozenset([XSD.integer, XSD.int, XSD.long, XSD.short,
                               XSD.nonNegativeInteger, XSD.positiveInteger])
NUMERIC_DATATYPES = INTEGER_DATATYPES | frozenset([XSD.decimal, XSD.double, XSD.float])

_DOC_ID_FORBIDDEN = re.compile(r'[/#\s<>"{}|\\^`]')
_LOCAL_NAME = re.compile(r'[A-Za-z_][A-Za-z0-9_\-]*\Z')


def is_valid_iri(value):
    return (isinstance(value, str) and bool(value) and ':' in value
            and not any(c.isspace() for c in value))


def make_iri(value):
    if not is_valid_iri(value):
        raise InvalidIri('%r is not an absolute IRI' % (value,))
    return URIRef(value)


def check_lexical(lexical, datatype):
    grammar = LEXICAL_GRAMMARS.get(datatype)
    if grammar is None:
        return True
    return grammar.match(lexical) is not None


def lexical_form(value):
    '''
        JSON argument value -> lexical string
    '''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, float, str)):
        return str(value)
    raise DatatypeError(repr(value), 'literal')


def make_literal(lexical, datatype):
    if datatype is None or datatype == XSD.string:
        return Literal(lexical)
    if not check_lexical(lexical, datatype):
        raise DatatypeError(lexical, datatype)
    return Literal(lexical, datatype=datatype)


def literal_datatype(literal):
    if literal.language:
        return RDF.langString
    return literal.datatype or XSD.string


def is_string_literal(term):
    return isinstance(term, Literal) and literal_datatype(term) in (XSD.string, RDF.langString)


def term_key(term):
    '''
        N-Triples style string form, used for every canonical ordering
    '''
    if isinstance(term, URIRef):
        return '<%s>' % term
    if isinstance(term, BNode):
        return '_:%s' % term
    if isinstance(term, Literal):
        if term.language:
            return '"%s"@%s' % (term, term.language)
        if term.datatype:
            return '"%s"^^<%s>' % (term, term.datatype)
        return '"%s"' % term
    raise TypeError('not an RDF term: %r' % (term,))


def triple_key(triple):
    return tuple(term_key(t) for t in triple)


class Graph(object):
    '''
        an rdflib graph plus the prefix map the canonical writer prints

        equality is triple-set equality; prefixes are presentation only
    '''

    def __init__(self, triples=(), prefixes=None):
        self._graph = RdflibGraph(bind_namespaces='none')
        self.prefixes = {}
        for prefix, namespace in (prefixes or {}).items():
            self.bind(prefix, namespace)
        for triple in triples:
            self.add(triple)

    def add(self, triple):
        s, p, o = triple
        if not isinstance(s, (URIRef, BNode)):
            raise RdfException('subject must be an IRI or blank node: %r' % (s,))
        if not isinstance(p, URIRef):
            raise RdfException('predicate must be an IRI: %r' % (p,))
        if not isinstance(o, (URIRef, BNode, Literal)):
            raise RdfException('object must be an RDF term: %r' % (o,))
        if (s, p, o) in self._graph:
            return False
        self._graph.add((s, p, o))
        return True

    def remove(self, triple):
        s, p, o = triple
        if None in (s, p, o) or (s, p, o) not in self._graph:
            return False
        self._graph.remove((s, p, o))
        return True

    def bind(self, prefix, namespace):
        self.prefixes[prefix] = URIRef(namespace)

    def __contains__(self, triple):
        return tuple(triple) in self._graph

    def __len__(self):
        return len(self._graph)

    def __iter__(self):
        return iter([Triple(*t) for t in self._graph])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return len(self) == len(other) and set(self._graph) == set(other._graph)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    __hash__ = None

    def __repr__(self):
        return '<Graph: %d triples, %d prefixes>' % (len(self), len(self.prefixes))

    def triples(self, subject=None, predicate=None, obj=None):
        for triple in list(self._graph.triples((subject, predicate, obj))):
            yield Triple(*triple)

    def objects(self, subject, predicate):
        return set(self._graph.objects(subject, predicate))

    def subjects(self, predicate, obj):
        return set(self._graph.subjects(predicate, obj))

    def predicates(self, subject):
        return set(self._graph.predicates(subject))

    def value(self, subject, predicate):
        '''first object in canonical order, or None'''
        objects = self.objects(subject, predicate)
        if not objects:
            return None
        return min(objects, key=term_key)

    def types(self, subject):
        return self.objects(subject, RDF.type)

    def all_subjects(self):
        return set(self._graph.subjects())

    def has_subject(self, subject):
        return (subject, None, None) in self._graph

    def copy(self):
        clone = Graph(prefixes=self.prefixes)
        clone._graph += self._graph
        return clone

    def to_rdflib(self):
        graph = RdflibGraph()
        for prefix, namespace in self.prefixes.items():
            graph.bind(prefix, namespace, override=True)
        graph += self._graph
        return graph


class MintState(object):
    '''
        per-(document, class) counters for deterministic IRI minting
    '''

    def __init__(self, base=None, counters=None):
        self.base = base if base is not None else app_settings.BASE_IRI
        self.counters = dict(counters or {})

    def mint(self, doc_id, class_local):
        check_doc_id(doc_id)
        if not _LOCAL_NAME.match(class_local or ''):
            raise InvalidLocalName('%r is not a valid local name' % (class_local,))
        key = (doc_id, class_local)
        n = self.counters.get(key, 1)
        self.counters[key] = n + 1
        iri = URIRef('%s%s/%s_%d' % (self.base, doc_id, class_local, n))
        logger.debug('minted %s', iri)
        return iri

    def resume(self, graph):
        '''
            advance counters past every minted IRI already present in graph
        '''
        pattern = re.compile(r'%s(?P<doc>[^/#\s]+)/(?P<local>[A-Za-z_][A-Za-z0-9_\-]*)_(?P<n>[0-9]+)\Z'
                             % re.escape(self.base))
        for triple in graph:
            for term in (triple.subject, triple.object):
                if not isinstance(term, URIRef):
                    continue
                match = pattern.match(term)
                if match is None:
                    continue
                key = (match.group('doc'), match.group('local'))
                next_n = int(match.group('n')) + 1
                if self.counters.get(key, 1) < next_n:
                    self.counters[key] = next_n

    def copy(self):
        return MintState(self.base, self.counters)


def check_doc_id(doc_id):
    if not isinstance(doc_id, str) or not doc_id or _DOC_ID_FORBIDDEN.search(doc_id):
        raise InvalidDocId('%r is not a pipeline document id (no "/", "#" or whitespace)' % (doc_id,))


def mint_iri(state, doc_id, class_local):
    return state.mint(doc_id, class_local)


def find_by_type_and_label(graph, cls, label):
    target = normalize_label(label)
    found = set()
    for subject in graph.subjects(RDF.type, cls):
        for value in graph.objects(subject, RDFS.label):
            if isinstance(value, Literal) and normalize_label(str(value)) == target:
                found.add(subject)
    return sorted(found, key=str)
