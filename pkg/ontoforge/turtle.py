# -*- coding: utf-8 -*-
'''
    Turtle subset reader/writer

    supported: @prefix, <absolute IRIs>, prefixed names, "a", [ ... ] blank
    node property lists, _:labels, "," and ";" lists, plain/typed/language
    literals, numeric and boolean shorthand, # comments.

    not supported: collections, @base / PREFIX / BASE, relative IRIs,
    triple-quoted strings.
'''
import logging
import os
import re
import tempfile

from .rdf import BNode, Graph, Literal, RDF, RdfException, URIRef, XSD, term_key

logger = logging.getLogger(__name__)


class TurtleSyntaxError(RdfException):
    def __init__(self, line, column, message):
        self.line = line
        self.column = column
        self.message = message
        super(TurtleSyntaxError, self).__init__('line %d, column %d: %s' % (line, column, message))


class UnknownPrefix(RdfException):
    def __init__(self, name):
        self.name = name
        super(UnknownPrefix, self).__init__('undefined prefix %r' % name)


_PREFIX_NAME = r'[A-Za-z][A-Za-z0-9_\-]*'
_LOCAL_PART = r'[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?'

_TOKENS = [
    ('WS', r'[ \t\r\n]+'),
    ('COMMENT', r'#[^\n]*'),
    ('LONG_STRING', r'"""|\'\'\''),
    ('STRING', r'"(?:[^"\\\n\r]|\\.)*"|\'(?:[^\'\\\n\r]|\\.)*\''),
    ('IRIREF', r'<[^<>"{}|^`\\\x00-\x20]*>'),
    ('PREFIX', r'@prefix\b'),
    ('BASE', r'@base\b'),
    ('LANGTAG', r'@[A-Za-z]+(?:-[A-Za-z0-9]+)*'),
    ('DATATYPE', r'\^\^'),
    ('DOUBLE', r'[+-]?(?:[0-9]+\.[0-9]*[eE][+-]?[0-9]+|\.[0-9]+[eE][+-]?[0-9]+|[0-9]+[eE][+-]?[0-9]+)'),
    ('DECIMAL', r'[+-]?[0-9]*\.[0-9]+'),
    ('INTEGER', r'[+-]?[0-9]+'),
    ('BLANK', r'_:' + _LOCAL_PART),
    ('PNAME', r'(?:%s)?:(?:%s)?' % (_PREFIX_NAME, _LOCAL_PART)),
    ('WORD', r'[A-Za-z][A-Za-z0-9_\-]*'),
    ('PUNCT', r'[.;,\[\]]'),
    ('PAREN', r'[()]'),
]
_SCANNER = re.compile('|'.join('(?P<%s>%s)' % pair for pair in _TOKENS))

_STRING_ESCAPE = re.compile(r'\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))')
_SIMPLE_ESCAPES = {'t': '\t', 'b': '\b', 'n': '\n', 'r': '\r', 'f': '\f', '"': '"', "'": "'", '\\': '\\'}

_NUMERIC_TYPES = {'INTEGER': XSD.integer, 'DECIMAL': XSD.decimal, 'DOUBLE': XSD.double}


class Token(object):
    __slots__ = ('kind', 'value', 'line', 'column')

    def __init__(self, kind, value, line, column):
        self.kind = kind
        self.value = value
        self.line = line
        self.column = column

    def __repr__(self):
        return '<Token %s %r @%d:%d>' % (self.kind, self.value, self.line, self.column)


def tokenize(text):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _SCANNER.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            if text[pos] in '"\'':
                raise TurtleSyntaxError(line, column, 'unterminated string literal')
            raise TurtleSyntaxError(line, column, 'unexpected character %r' % text[pos])
        kind, value = match.lastgroup, match.group()
        if kind == 'LONG_STRING':
            raise TurtleSyntaxError(line, column, 'multi-line string literals are not supported')
        if kind == 'BASE':
            raise TurtleSyntaxError(line, column, '@base is not supported')
        if kind == 'PAREN':
            raise TurtleSyntaxError(line, column, 'collections are not supported')
        if kind == 'WORD':
            if value == 'a':
                kind = 'A'
            elif value in ('true', 'false'):
                kind = 'BOOLEAN'
            else:
                raise TurtleSyntaxError(line, column, 'unexpected keyword %r' % value)
        if kind == 'STRING':
            value = _unescape(value[1:-1], line, column)
        if kind not in ('WS', 'COMMENT'):
            tokens.append(Token(kind, value, line, column))
        newlines = value.count('\n') if kind in ('WS', 'COMMENT') else 0
        if newlines:
            line += newlines
            line_start = match.start() + match.group().rindex('\n') + 1
        pos = match.end()
    return tokens


def _unescape(body, line, column):
    def replace(match):
        short, long_, simple = match.groups()
        if short or long_:
            code = int(short or long_, 16)
            if code > 0x10FFFF or 0xD800 <= code <= 0xDFFF:
                raise TurtleSyntaxError(line, column, 'escape U+%04X is not a Unicode scalar value' % code)
            return chr(code)
        if simple in _SIMPLE_ESCAPES:
            return _SIMPLE_ESCAPES[simple]
        raise TurtleSyntaxError(line, column, 'invalid escape \\%s' % simple)
    return _STRING_ESCAPE.sub(replace, body)


class _Parser(object):

    def __init__(self, tokens, end_line, end_column):
        self.tokens = tokens
        self.index = 0
        self.end = (end_line, end_column)
        self.graph = Graph()
        self.labels = set(t.value[2:] for t in tokens if t.kind == 'BLANK')
        self.anon_count = 0

    def peek(self):
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def next(self):
        token = self.peek()
        if token is None:
            raise TurtleSyntaxError(self.end[0], self.end[1], 'unexpected end of document')
        self.index += 1
        return token

    def error(self, token, message):
        if token is None:
            return TurtleSyntaxError(self.end[0], self.end[1], message)
        return TurtleSyntaxError(token.line, token.column, message)

    def expect_punct(self, char):
        token = self.next()
        if token.kind != 'PUNCT' or token.value != char:
            raise self.error(token, 'expected %r, found %r' % (char, token.value))
        return token

    def at_punct(self, char):
        token = self.peek()
        return token is not None and token.kind == 'PUNCT' and token.value == char

    def fresh_blank(self):
        while True:
            label = 'b%d' % self.anon_count
            self.anon_count += 1
            if label not in self.labels:
                self.labels.add(label)
                return BNode(label)

    def parse(self):
        while self.peek() is not None:
            self.statement()
        return self.graph

    def statement(self):
        token = self.peek()
        if token.kind == 'PREFIX':
            self.next()
            name = self.next()
            if name.kind != 'PNAME' or not name.value.endswith(':'):
                raise self.error(name, 'expected a prefix name ending in ":"')
            iri = self.next()
            if iri.kind != 'IRIREF':
                raise self.error(iri, 'expected an IRI after prefix name')
            self.graph.bind(name.value[:-1], self.absolute_iri(iri))
            self.expect_punct('.')
            return
        if self.at_punct('['):
            subject = self.blank_node_property_list()
            if not self.at_punct('.'):
                self.predicate_object_list(subject)
        else:
            subject = self.subject()
            self.predicate_object_list(subject)
        self.expect_punct('.')

    def subject(self):
        token = self.next()
        if token.kind in ('IRIREF', 'PNAME'):
            return self.iri(token)
        if token.kind == 'BLANK':
            return BNode(token.value[2:])
        raise self.error(token, 'expected a subject, found %r' % token.value)

    def predicate_object_list(self, subject):
        self.verb_object_list(subject)
        while self.at_punct(';'):
            self.next()
            token = self.peek()
            # trailing / repeated ";" are allowed
            if token is None or (token.kind == 'PUNCT' and token.value in '.];'):
                continue
            self.verb_object_list(subject)

    def verb_object_list(self, subject):
        token = self.next()
        if token.kind == 'A':
            predicate = RDF.type
        elif token.kind in ('IRIREF', 'PNAME'):
            predicate = self.iri(token)
        else:
            raise self.error(token, 'expected a predicate, found %r' % token.value)
        self.graph.add((subject, predicate, self.object()))
        while self.at_punct(','):
            self.next()
            self.graph.add((subject, predicate, self.object()))

    def object(self):
        token = self.peek()
        if token is None:
            raise self.error(None, 'expected an object')
        if token.kind == 'PUNCT' and token.value == '[':
            return self.blank_node_property_list()
        token = self.next()
        if token.kind in ('IRIREF', 'PNAME'):
            return self.iri(token)
        if token.kind == 'BLANK':
            return BNode(token.value[2:])
        if token.kind == 'STRING':
            return self.literal(token)
        if token.kind in _NUMERIC_TYPES:
            return Literal(token.value, datatype=_NUMERIC_TYPES[token.kind])
        if token.kind == 'BOOLEAN':
            return Literal(token.value, datatype=XSD.boolean)
        raise self.error(token, 'expected an object, found %r' % token.value)

    def literal(self, token):
        following = self.peek()
        if following is not None and following.kind == 'LANGTAG':
            self.next()
            return Literal(token.value, lang=following.value[1:])
        if following is not None and following.kind == 'DATATYPE':
            self.next()
            datatype = self.next()
            if datatype.kind not in ('IRIREF', 'PNAME'):
                raise self.error(datatype, 'expected a datatype IRI after "^^"')
            return Literal(token.value, datatype=self.iri(datatype))
        return Literal(token.value)

    def blank_node_property_list(self):
        self.expect_punct('[')
        node = self.fresh_blank()
        if not self.at_punct(']'):
            self.predicate_object_list(node)
        self.expect_punct(']')
        return node

    def iri(self, token):
        if token.kind == 'IRIREF':
            return self.absolute_iri(token)
        prefix, local = token.value.split(':', 1)
        if prefix not in self.graph.prefixes:
            raise UnknownPrefix(prefix)
        return URIRef(self.graph.prefixes[prefix] + local)

    def absolute_iri(self, token):
        value = token.value[1:-1]
        if ':' not in value:
            raise self.error(token, 'relative IRI <%s> is not supported' % value)
        return URIRef(value)


def parse_turtle(text):
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            line_start = text.rfind(b'\n', 0, e.start) + 1
            raise TurtleSyntaxError(text.count(b'\n', 0, e.start) + 1, e.start - line_start + 1, 'invalid UTF-8')
    tokens = tokenize(text)
    lines = text.split('\n')
    parser = _Parser(tokens, len(lines), len(lines[-1]) + 1)
    graph = parser.parse()
    logger.debug('parsed %d triples, %d prefixes', len(graph), len(graph.prefixes))
    return graph


_PNAME_LOCAL = re.compile(r'[A-Za-z_][A-Za-z0-9_\-]*\Z')
_VALID_PREFIX = re.compile(_PREFIX_NAME + r'\Z')
_ESCAPES = {'\\': '\\\\', '"': '\\"', '\n': '\\n', '\r': '\\r', '\t': '\\t', '\b': '\\b', '\f': '\\f'}


def _quote(text):
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7f:
            out.append('\\u%04X' % ord(ch))
        else:
            out.append(ch)
    return '"%s"' % ''.join(out)


class _Writer(object):

    def __init__(self, prefixes):
        self.prefixes = sorted((name, str(ns)) for name, ns in prefixes.items() if _VALID_PREFIX.match(name))
        # longest namespace wins, then prefix name
        self.lookup = sorted(self.prefixes, key=lambda pair: (-len(pair[1]), pair[0]))

    def iri(self, iri):
        iri = str(iri)
        for name, namespace in self.lookup:
            if iri.startswith(namespace) and _PNAME_LOCAL.match(iri[len(namespace):]):
                return '%s:%s' % (name, iri[len(namespace):])
        return '<%s>' % iri

    def term(self, term):
        if isinstance(term, URIRef):
            return self.iri(term)
        if isinstance(term, BNode):
            return '_:%s' % term
        text = _quote(str(term))
        if term.language:
            return '%s@%s' % (text, term.language)
        if term.datatype is not None:
            return '%s^^%s' % (text, self.iri(term.datatype))
        return text


def serialize_turtle(graph):
    writer = _Writer(graph.prefixes)
    lines = ['@prefix %s: <%s> .' % pair for pair in writer.prefixes]
    by_subject = {}
    for s, p, o in graph:
        by_subject.setdefault(s, {}).setdefault(p, []).append(o)
    blocks = []
    for subject in sorted(by_subject, key=term_key):
        predicates = by_subject[subject]
        parts = []
        for predicate in sorted(predicates, key=term_key):
            verb = 'a' if predicate == RDF.type else writer.iri(predicate)
            objects = ' , '.join(writer.term(o) for o in sorted(predicates[predicate], key=term_key))
            parts.append('%s %s' % (verb, objects))
        blocks.append('%s %s .' % (writer.term(subject), ' ;\n    '.join(parts)))
    if not lines and not blocks:
        return ''
    text = '\n'.join(lines)
    if blocks:
        text = (text + '\n\n' if text else '') + '\n\n'.join(blocks)
    return text + '\n'


def load_turtle(path):
    with open(path, 'rb') as f:
        return parse_turtle(f.read())


def save_turtle(graph, path):
    '''
        write the canonical serialization, replacing path atomically
    '''
    text = serialize_turtle(graph)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix='.ttl.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug('saved %d triples to %s', len(graph), path)
    return path
