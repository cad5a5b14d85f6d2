# -*- coding: utf-8 -*-
import json
import logging
import os
from dataclasses import dataclass
from typing import List, Optional

from django.dispatch import receiver

from .compiler import (CHECK_EXISTING, CREATE, CREATE_QUANTITY, LINK, SET,
                       BOOLEAN, ENUM, INTEGER, IRI, NUMBER, STRING)
from .rdf import (BNode, Graph, InvalidDocId, InvalidLocalName, Literal, MintState, OWL, RDF, RDFS,
                  URIRef, XSD, check_lexical, find_by_type_and_label, is_valid_iri, lexical_form,
                  literal_datatype, term_key)
from .schema import DATATYPE
from .signals import post_invoke, pre_invoke, store_flushed
from .turtle import load_turtle, save_turtle
from .utils import canonical_hash, humanize, is_encodable, local_name, snake_case

logger = logging.getLogger(__name__)

ONTOLOGY_VIOLATION = 'OntologyConstraintViolation'
DATATYPE_VIOLATION = 'DatatypeViolation'
CARDINALITY_VIOLATION = 'CardinalityViolation'
UNKNOWN_ENTITY = 'UnknownEntity'
DUPLICATE_CALL = 'DuplicateCall'
ALREADY_ATTACHED = 'AlreadyAttached'

RETRYABLE = frozenset([ONTOLOGY_VIOLATION, DATATYPE_VIOLATION, UNKNOWN_ENTITY])

CREATED = 'created'
REUSED = 'reused'
ATTACHED = 'attached'
DONE = 'done'
FOUND = 'found'
NOT_FOUND = 'not_found'

# validation modes: full feedback, ablation (datatype parsing only), force (nothing)
FULL, ABLATION, FORCE = 'full', 'ablation', 'force'

# bookkeeping predicates the validator never checks against the schema
_UNCHECKED_PREDICATES = frozenset([RDF.type, RDFS.label, RDFS.comment, OWL.sameAs])


class RuntimeException(Exception):
    pass


class UnknownTool(RuntimeException):
    pass


@dataclass
class ViolationReport:
    error_type: str
    message: str
    field: Optional[str] = None
    allowed_values: Optional[List[str]] = None
    subject: Optional[URIRef] = None
    prop: Optional[URIRef] = None

    ok = False

    @property
    def retryable(self):
        return self.error_type in RETRYABLE

    def to_dict(self):
        data = {
            'ok': False,
            'error_type': self.error_type,
            'field': self.field,
            'message': self.message,
        }
        if self.allowed_values is not None:
            data['allowed_values'] = list(self.allowed_values)
        data['retryable'] = self.retryable
        data['status'] = 'rejected'
        return data


@dataclass
class ToolResult:
    status: str
    instance_iri: Optional[URIRef] = None
    matches: Optional[List[URIRef]] = None

    ok = True
    validated = True

    def to_dict(self):
        data = {'ok': True}
        if self.instance_iri is not None:
            data['instance_iri'] = str(self.instance_iri)
        data['validated'] = True
        data['status'] = self.status
        if self.matches is not None:
            data['matches'] = [str(m) for m in self.matches]
        return data


def outcome_dict(outcome):
    if isinstance(outcome, list):
        return [report.to_dict() for report in outcome]
    return outcome.to_dict()


def _field_name(prop):
    return snake_case(local_name(prop))


def _literal_text(term):
    return str(term) if isinstance(term, Literal) else term_key(term)


class Session(object):
    '''
        one document's A-Box under construction

        the graph only ever holds triples admitted by a successful call;
        call_log is append-only
    '''

    def __init__(self, schema, toolset, doc_id, graph=None, mint=None, workdir=None,
                 feedback_enabled=True, force=False, main_graph=None):
        self.schema = schema
        self.toolset = toolset
        self.doc_id = doc_id
        self.graph = graph if graph is not None else self._new_graph(schema, doc_id, mint)
        self.main_graph = main_graph
        self.mint = mint if mint is not None else MintState()
        self.workdir = workdir
        self.feedback_enabled = feedback_enabled
        self.mode = FORCE if force else (FULL if feedback_enabled else ABLATION)
        self.call_log = []
        self.seq = 0

    @staticmethod
    def _new_graph(schema, doc_id, mint):
        graph = Graph(prefixes=schema.prefixes)
        graph.bind('rdfs', RDFS)
        graph.bind('xsd', XSD)
        base = mint.base if mint is not None else MintState().base
        graph.bind('doc', '%s%s/' % (base, doc_id))
        return graph

    @classmethod
    def open(cls, schema, toolset, doc_id, workdir=None, feedback_enabled=True, main_graph=None):
        '''
            resume from <workdir>/<doc_id>.ttl when it exists; main_graph is the
            read-only A-Box an extension schema links into
        '''
        session = cls(schema, toolset, doc_id, workdir=workdir, feedback_enabled=feedback_enabled,
                      main_graph=main_graph)
        path = session.store_path
        if path is not None and os.path.exists(path):
            graph = load_turtle(path)
            for prefix, namespace in session.graph.prefixes.items():
                graph.prefixes.setdefault(prefix, namespace)
            session.graph = graph
            session.mint.resume(graph)
            logger.info('resumed %s with %d triples', path, len(graph))
        return session

    def fork(self, feedback_enabled=None, force=False):
        if feedback_enabled is None:
            feedback_enabled = self.feedback_enabled
        clone = Session(self.schema, self.toolset, self.doc_id, graph=self.graph.copy(),
                        mint=self.mint.copy(), workdir=None, feedback_enabled=feedback_enabled, force=force,
                        main_graph=self.main_graph)
        clone.call_log = list(self.call_log)
        clone.seq = self.seq
        return clone

    @property
    def store_path(self):
        if not self.workdir:
            return None
        return os.path.join(self.workdir, '%s.ttl' % self.doc_id)

    @property
    def log_path(self):
        if not self.workdir:
            return None
        return os.path.join(self.workdir, '%s.jsonl' % self.doc_id)

    def flush(self):
        path = self.store_path
        if path is None:
            return None
        os.makedirs(self.workdir, exist_ok=True)
        save_turtle(self.graph, path)
        store_flushed.send(sender=Session, session=self, path=path)
        return path

    def _reject(self, report):
        '''the report when this mode gives feedback on it, otherwise None'''
        if self.mode == FULL or (self.mode == ABLATION and report.error_type == DATATYPE_VIOLATION):
            return report
        logger.debug('accepted without feedback: %s %s', report.error_type, report.message)
        return None

    # tool entry point

    def invoke(self, tool_name, args):
        tool = self.toolset.get(tool_name)
        if tool is None:
            raise UnknownTool('no tool named %r' % (tool_name,))
        args = dict(args or {})
        self.seq += 1
        pre_invoke.send(sender=Session, session=self, tool=tool_name, arguments=args)
        size = len(self.graph)
        outcome = self._dispatch(tool, args)
        if outcome.ok and not tool.is_query:
            self.call_log.append((tool.name, self._call_key(tool, args)))
            if len(self.graph) != size:
                self.flush()
        logger.debug('%s %s -> %s', tool_name, args, outcome_dict(outcome))
        post_invoke.send(sender=Session, session=self, tool=tool_name, arguments=args, outcome=outcome)
        return outcome

    @staticmethod
    def _call_key(tool, args):
        return canonical_hash({'tool': tool.name,
                               'args': dict((k, v) for k, v in args.items() if v is not None)})

    def _dispatch(self, tool, args):
        report = self._check_arguments(tool, args)
        if report is not None:
            return report
        if not tool.is_query and self.mode == FULL:
            key = self._call_key(tool, args)
            if any(key == logged for _, logged in self.call_log):
                return ViolationReport(DUPLICATE_CALL, '%s was already called successfully with identical '
                                                       'arguments.' % tool.name)
        if tool.operation == CREATE:
            attrs = dict((a.binding, args[a.name]) for a in tool.arguments
                         if a.binding is not None and args.get(a.name) is not None)
            return self.create_instance(tool.binding, args['label'], attrs, doc_id=args['doc_id'])
        if tool.operation == CREATE_QUANTITY:
            value, unit = tool.argument('value'), tool.argument('unit')
            return self.create_quantity(tool.binding, args['value'], args['unit'],
                                        value_property=value.binding, unit_property=unit.binding)
        if tool.operation == CHECK_EXISTING:
            return self.check_existing(tool.binding, args['label'])
        if tool.operation == LINK:
            return self.link(URIRef(args['subject_iri']), tool.binding, URIRef(args['object_iri']))
        if tool.operation == SET:
            return self.set_attribute(URIRef(args['subject_iri']), tool.binding, args['value'])
        raise UnknownTool('tool %r has no runtime operation %r' % (tool.name, tool.operation))

    def _check_arguments(self, tool, args):
        for spec in tool.arguments:
            value = args.get(spec.name)
            if value is None:
                if spec.required:
                    return ViolationReport(DATATYPE_VIOLATION, 'Argument %r is required.' % spec.name,
                                           field=spec.name)
                continue
            if isinstance(value, str) and not is_encodable(value):
                return ViolationReport(DATATYPE_VIOLATION, 'Argument %r is not valid Unicode text.' % spec.name,
                                       field=spec.name)
            if self.mode == FORCE:
                if isinstance(value, (str, int, float)):
                    continue
            elif self._conforms(spec, value):
                continue
            report = self._reject(ViolationReport(
                DATATYPE_VIOLATION, 'Argument %r must be %s, got %s.'
                % (spec.name, self._kind_text(spec), json.dumps(value, ensure_ascii=False)), field=spec.name))
            if report is not None:
                return report
            if not isinstance(value, (str, int, float)):
                return ViolationReport(DATATYPE_VIOLATION, 'Argument %r cannot be stored.' % spec.name,
                                       field=spec.name)
        for name in sorted(args):
            if tool.argument(name) is None:
                report = self._reject(ViolationReport(ONTOLOGY_VIOLATION, '%r is not an argument of %s.'
                                                      % (name, tool.name), field=name))
                if report is not None:
                    return report
                args.pop(name)
        return None

    @staticmethod
    def _kind_text(spec):
        if spec.value_kind == ENUM:
            return 'one of %s' % ', '.join(spec.labels)
        if spec.value_kind == IRI:
            return 'an absolute IRI'
        return 'a JSON %s' % spec.value_kind

    @staticmethod
    def _conforms(spec, value):
        kind = spec.value_kind
        if kind in (STRING, ENUM):
            return isinstance(value, str)
        if kind == IRI:
            return is_valid_iri(value)
        if kind == BOOLEAN:
            return isinstance(value, bool)
        if kind == INTEGER:
            return isinstance(value, int) and not isinstance(value, bool)
        if kind == NUMBER:
            return isinstance(value, (int, float)) and not isinstance(value, bool)
        return False

    # semantic operations

    def types(self, iri):
        return _types(self.graph, iri, self.main_graph)

    def exists(self, iri):
        return bool(self.types(iri))

    def _value_term(self, prop, value, field):
        '''(term, report); report is set when the value breaks the range'''
        definition = self.schema.get_property(prop)
        vocabulary = self.schema.vocabularies.get(prop)
        text = lexical_form(value)
        if vocabulary is not None:
            iri = vocabulary.iri_for(text)
            if iri is not None:
                return iri, None
            return Literal(text), self._reject(ViolationReport(
                ONTOLOGY_VIOLATION, "%s value '%s' is not permitted by the ontology." % (humanize(definition.local), text),
                field=field, allowed_values=vocabulary.labels, prop=prop))
        datatype = definition.datatype
        if datatype is None:
            return Literal(text), self._reject(ViolationReport(
                ONTOLOGY_VIOLATION, '%s links instances; it does not take a value.' % definition.local,
                field=field, prop=prop))
        if datatype == XSD.string:
            return Literal(text), None
        if check_lexical(text, datatype):
            return Literal(text, datatype=datatype), None
        return Literal(text, datatype=datatype), self._reject(ViolationReport(
            DATATYPE_VIOLATION, "%s value '%s' is not a valid xsd:%s." % (humanize(definition.local), text,
                                                                          local_name(datatype)),
            field=field, prop=prop))

    def _domain_report(self, prop, types, field, subject=None):
        if self.schema.domain_admits(prop, types):
            return None
        definition = self.schema.properties[prop]
        return self._reject(ViolationReport(
            ONTOLOGY_VIOLATION, '%s cannot be used on %s; its domain is %s.'
            % (definition.local, ', '.join(sorted(local_name(t) for t in types)) or 'an untyped instance',
               ', '.join(sorted(local_name(c) for c in definition.domain))),
            field=field, subject=subject, prop=prop))

    def _max_report(self, subject, prop, types, count, field):
        bound = self.schema.max_cardinality(types, prop)
        if bound is None or count <= bound:
            return None
        return self._reject(ViolationReport(
            CARDINALITY_VIOLATION, '%s allows at most %d value(s) on %s.' % (local_name(prop), bound, subject),
            field=field, subject=subject, prop=prop))

    def create_instance(self, cls, label, attrs, doc_id=None):
        doc_id = doc_id if doc_id is not None else self.doc_id
        existing = find_by_type_and_label(self.graph, cls, label)
        if existing:
            return ToolResult(REUSED, instance_iri=existing[0])
        triples = []
        for prop in sorted(attrs, key=_field_name):
            field = _field_name(prop)
            report = self._domain_report(prop, {cls}, field)
            if report is not None:
                return report
            term, report = self._value_term(prop, attrs[prop], field)
            if report is not None:
                return report
            report = self._max_report('the new instance', prop, {cls}, 1, field)
            if report is not None:
                return report
            triples.append((prop, term))
        try:
            iri = self.mint.mint(doc_id, self.schema.classes[cls].local)
        except (InvalidDocId, InvalidLocalName) as e:
            return ViolationReport(DATATYPE_VIOLATION, str(e), field='doc_id')
        self.graph.add((iri, RDF.type, cls))
        self.graph.add((iri, RDFS.label, Literal(label)))
        for prop, term in triples:
            self.graph.add((iri, prop, term))
        return ToolResult(CREATED, instance_iri=iri)

    def create_quantity(self, cls, value, unit, value_property, unit_property):
        '''
            always a fresh instance, labelled "<value> <unit label>"
        '''
        value_term, report = self._value_term(value_property, value, 'value')
        if report is not None:
            return report
        unit_term, report = self._value_term(unit_property, unit, 'unit')
        if report is not None:
            return report
        vocabulary = self.schema.vocabularies[unit_property]
        unit_label = vocabulary.label_for(unit_term) or lexical_form(unit)
        try:
            iri = self.mint.mint(self.doc_id, self.schema.classes[cls].local)
        except (InvalidDocId, InvalidLocalName) as e:
            return ViolationReport(DATATYPE_VIOLATION, str(e), field='value')
        self.graph.add((iri, RDF.type, cls))
        self.graph.add((iri, RDFS.label, Literal('%s %s' % (lexical_form(value), unit_label))))
        self.graph.add((iri, value_property, value_term))
        self.graph.add((iri, unit_property, unit_term))
        return ToolResult(CREATED, instance_iri=iri)

    def check_existing(self, cls, label):
        graph = self.graph
        if self.main_graph is not None and self.schema.classes[cls].imported:
            graph = self.main_graph
        matches = find_by_type_and_label(graph, cls, label)
        if not matches:
            return ToolResult(NOT_FOUND, matches=[])
        return ToolResult(FOUND, instance_iri=matches[0], matches=matches)

    def link(self, subject, prop, obj):
        if self.schema.is_attribute(prop):
            report = self._reject(ViolationReport(
                ONTOLOGY_VIOLATION, '%s takes a value, not a link; use set_%s.' % (local_name(prop), _field_name(prop)),
                field='object_iri', prop=prop))
            if report is not None:
                return report
        for iri, field in ((subject, 'subject_iri'), (obj, 'object_iri')):
            if not self.exists(iri):
                report = self._reject(ViolationReport(
                    UNKNOWN_ENTITY, '%s was never created; create it before passing its IRI.' % iri,
                    field=field, subject=iri))
                if report is not None:
                    return report
        subject_types, object_types = self.types(subject), self.types(obj)
        report = self._domain_report(prop, subject_types, 'subject_iri', subject)
        if report is not None:
            return report
        if not self.schema.range_admits(prop, object_types):
            definition = self.schema.properties[prop]
            report = self._reject(ViolationReport(
                ONTOLOGY_VIOLATION, '%s cannot point to %s; its range is %s.'
                % (definition.local, ', '.join(sorted(local_name(t) for t in object_types)) or 'an untyped instance',
                   ', '.join(sorted(local_name(c) for c in definition.range))),
                field='object_iri', subject=subject, prop=prop))
            if report is not None:
                return report
        if (subject, prop, obj) in self.graph:
            report = self._reject(ViolationReport(
                ALREADY_ATTACHED, '%s already links %s to %s.' % (local_name(prop), subject, obj),
                field='object_iri', subject=subject, prop=prop))
            if report is not None:
                return report
            return ToolResult(ATTACHED, instance_iri=subject)
        count = len(self.graph.objects(subject, prop)) + 1
        report = self._max_report(subject, prop, subject_types, count, 'object_iri')
        if report is not None:
            return report
        self.graph.add((subject, prop, obj))
        return ToolResult(ATTACHED, instance_iri=subject)

    def set_attribute(self, subject, prop, value):
        if not self.exists(subject):
            report = self._reject(ViolationReport(
                UNKNOWN_ENTITY, '%s was never created; create it before passing its IRI.' % subject,
                field='subject_iri', subject=subject))
            if report is not None:
                return report
        types = self.types(subject)
        report = self._domain_report(prop, types, 'subject_iri', subject)
        if report is not None:
            return report
        term, report = self._value_term(prop, value, 'value')
        if report is not None:
            return report
        if (subject, prop, term) in self.graph:
            report = self._reject(ViolationReport(
                ALREADY_ATTACHED, '%s already has %s %s.' % (subject, local_name(prop), _literal_text(term)),
                field='value', subject=subject, prop=prop))
            if report is not None:
                return report
            return ToolResult(ATTACHED, instance_iri=subject)
        count = len(self.graph.objects(subject, prop)) + 1
        report = self._max_report(subject, prop, types, count, 'value')
        if report is not None:
            return report
        self.graph.add((subject, prop, term))
        return ToolResult(ATTACHED, instance_iri=subject)

    def finalize(self):
        '''
            ToolResult(done) and a flushed store, or every outstanding
            min-cardinality violation
        '''
        if self.mode == FULL:
            reports = min_cardinality_reports(self.graph, self.schema)
            if reports:
                logger.info('finalize %s: %d cardinality violation(s) outstanding', self.doc_id, len(reports))
                return reports
        self.flush()
        logger.info('finalize %s: done', self.doc_id)
        return ToolResult(DONE)


@receiver(post_invoke, sender=Session)
def append_run_log(sender, session, tool, arguments, outcome, **kwargs):
    path = session.log_path
    if path is None:
        return
    os.makedirs(session.workdir, exist_ok=True)
    entry = {'seq': session.seq, 'tool': tool, 'args': arguments, 'outcome': outcome_dict(outcome)}
    with open(path, 'a', encoding='utf-8') as f:
        f.write(json.dumps(entry, sort_keys=True) + '\n')


def _types(graph, iri, main_graph=None):
    types = graph.types(iri)
    if main_graph is not None:
        types = types | main_graph.types(iri)
    return types


def _schema_types(graph, schema, subject, main_graph=None):
    return set(t for t in _types(graph, subject, main_graph) if t in schema.classes)


def min_cardinality_reports(graph, schema):
    reports = []
    for subject in sorted(graph.all_subjects(), key=term_key):
        types = _schema_types(graph, schema, subject)
        if not types:
            continue
        for rule in sorted(schema.rules_for(types), key=lambda r: str(r.property)):
            if rule.min is None:
                continue
            count = len(graph.objects(subject, rule.property))
            if count < rule.min:
                reports.append(ViolationReport(
                    CARDINALITY_VIOLATION, '%s requires at least %d %s value(s) on %s; found %d.'
                    % (local_name(rule.on_class), rule.min, local_name(rule.property), subject, count),
                    field=_field_name(rule.property), subject=subject, prop=rule.property))
    return reports


def _check_value(graph, schema, subject, prop, obj, main_graph=None):
    definition = schema.properties[prop]
    field = _field_name(prop)
    vocabulary = schema.vocabularies.get(prop)
    if vocabulary is not None:
        if obj in [iri for _, iri in vocabulary.allowed]:
            return None
        return ViolationReport(
            ONTOLOGY_VIOLATION, "%s value '%s' is not permitted by the ontology." % (humanize(definition.local),
                                                                                       _literal_text(obj)),
            field=field, allowed_values=vocabulary.labels, subject=subject, prop=prop)
    if definition.kind == DATATYPE:
        datatype = definition.datatype
        if isinstance(obj, Literal) and literal_datatype(obj) == datatype and check_lexical(str(obj), datatype):
            return None
        return ViolationReport(
            DATATYPE_VIOLATION, "%s value %s is not a valid xsd:%s." % (humanize(definition.local), term_key(obj),
                                                                       local_name(datatype)),
            field=field, subject=subject, prop=prop)
    if not isinstance(obj, (URIRef, BNode)):
        return ViolationReport(ONTOLOGY_VIOLATION, '%s must link to an instance, not %s.'
                               % (definition.local, term_key(obj)), field=field, subject=subject, prop=prop)
    object_types = _schema_types(graph, schema, obj, main_graph)
    if not object_types:
        return ViolationReport(UNKNOWN_ENTITY, '%s links to %s, which was never created.' % (subject, obj),
                               field=field, subject=subject, prop=prop)
    if not schema.range_admits(prop, object_types):
        return ViolationReport(ONTOLOGY_VIOLATION, '%s of %s points to %s outside its range.'
                               % (definition.local, subject, obj), field=field, subject=subject, prop=prop)
    return None


def validate_graph(graph, schema, main_graph=None):
    '''
        exhaustive post-hoc check of a store, ordered by instance IRI then property

        links into main_graph resolve against its types; its own triples
        are not checked
    '''
    reports = []
    for subject in sorted(graph.all_subjects(), key=term_key):
        types = _schema_types(graph, schema, subject)
        for cls in sorted(graph.types(subject)):
            if cls not in schema.classes:
                reports.append(ViolationReport(ONTOLOGY_VIOLATION, '%s is typed with undeclared class %s.'
                                               % (subject, cls), subject=subject, prop=RDF.type))
        schema_predicates = sorted(p for p in graph.predicates(subject) if p not in _UNCHECKED_PREDICATES)
        if not types and schema_predicates:
            reports.append(ViolationReport(UNKNOWN_ENTITY, '%s carries properties but was never created.' % subject,
                                           subject=subject))
        for prop in schema_predicates:
            if prop not in schema.properties:
                reports.append(ViolationReport(ONTOLOGY_VIOLATION, '%s is not declared by the ontology.' % prop,
                                               field=local_name(prop), subject=subject, prop=prop))
                continue
            if types and not schema.domain_admits(prop, types):
                reports.append(ViolationReport(
                    ONTOLOGY_VIOLATION, '%s cannot be used on %s.' % (local_name(prop), subject),
                    field=_field_name(prop), subject=subject, prop=prop))
            objects = sorted(graph.objects(subject, prop), key=term_key)
            for obj in objects:
                report = _check_value(graph, schema, subject, prop, obj, main_graph)
                if report is not None:
                    reports.append(report)
            bound = schema.max_cardinality(types, prop) if types else None
            if bound is not None and len(objects) > bound:
                reports.append(ViolationReport(
                    CARDINALITY_VIOLATION, '%s allows at most %d value(s) on %s; found %d.'
                    % (local_name(prop), bound, subject, len(objects)),
                    field=_field_name(prop), subject=subject, prop=prop))
    reports.extend(min_cardinality_reports(graph, schema))
    reports.sort(key=lambda r: (term_key(r.subject) if r.subject is not None else '',
                                str(r.prop) if r.prop is not None else ''))
    return reports


def invoke(session, tool, args):
    return session.invoke(tool, args)


def finalize(session):
    return session.finalize()
