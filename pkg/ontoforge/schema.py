# -*- coding: utf-8 -*-
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Optional, Tuple

from .conf import app_settings
from .rdf import NUMERIC_DATATYPES, BNode, Literal, OWL, RDF, RDFS, URIRef, XSD, term_key
from .turtle import load_turtle, serialize_turtle
from .utils import local_name, normalize_label, sha256_text

logger = logging.getLogger(__name__)

OBJECT = 'object'
DATATYPE = 'datatype'

_CARDINALITY_PREDICATES = (OWL.minCardinality, OWL.maxCardinality, OWL.cardinality)
_IGNORED_PARENTS = frozenset([OWL.Thing, RDFS.Resource])
_TRUE = frozenset(['true', '1'])


class SchemaException(Exception):
    pass


class SchemaError(SchemaException):
    def __init__(self, detail):
        self.detail = detail
        super(SchemaError, self).__init__(detail)


class UnknownClass(SchemaException):
    pass


class UnknownProperty(SchemaException):
    pass


@dataclass(frozen=True)
class ClassDef:
    iri: URIRef
    local: str
    parents: FrozenSet[URIRef] = frozenset()
    comment: Optional[str] = None
    is_top_entity: bool = False
    imported: bool = False


@dataclass(frozen=True)
class PropertyDef:
    iri: URIRef
    local: str
    kind: str
    domain: FrozenSet[URIRef] = frozenset()
    range: FrozenSet[URIRef] = frozenset()
    comment: Optional[str] = None

    @property
    def datatype(self):
        if self.kind != DATATYPE:
            return None
        return next(iter(self.range))


@dataclass(frozen=True)
class CardinalityRule:
    '''
        owl:cardinality n is held as min = max = n
    '''
    on_class: URIRef
    property: URIRef
    min: Optional[int] = None
    max: Optional[int] = None

    @property
    def exact(self):
        if self.min is not None and self.min == self.max:
            return self.min
        return None


@dataclass(frozen=True)
class Vocabulary:
    property: URIRef
    allowed: Tuple[Tuple[str, URIRef], ...]

    @property
    def labels(self):
        return [label for label, _ in self.allowed]

    def iri_for(self, value):
        '''controlled IRI for a label (store-grade normalisation), or None'''
        target = normalize_label(value)
        for label, iri in self.allowed:
            if normalize_label(label) == target:
                return iri
        return None

    def label_for(self, iri):
        for label, member in self.allowed:
            if member == iri:
                return label
        return None


@dataclass(frozen=True)
class SchemaModel:
    classes: Dict[URIRef, ClassDef]
    properties: Dict[URIRef, PropertyDef]
    cardinalities: Tuple[CardinalityRule, ...]
    vocabularies: Dict[URIRef, Vocabulary]
    fingerprint: str = ''
    top_entity: Optional[URIRef] = None
    extends: Optional[str] = None
    prefixes: Dict[str, URIRef] = field(default_factory=dict, compare=False)
    _closures: Dict[URIRef, FrozenSet[URIRef]] = field(default_factory=dict, compare=False, repr=False)

    def subclass_closure(self, cls):
        if cls not in self.classes:
            raise UnknownClass('%s is not a declared class' % cls)
        closure = self._closures.get(cls)
        if closure is None:
            seen, stack = set(), [cls]
            while stack:
                current = stack.pop()
                if current in seen:
                    continue
                seen.add(current)
                stack.extend(self.classes[current].parents)
            closure = self._closures[cls] = frozenset(seen)
        return closure

    def own_classes(self):
        '''classes declared by this T-Box, not imported from the one it extends'''
        return sorted(c for c, definition in self.classes.items() if not definition.imported)

    def allowed_values(self, prop):
        if prop not in self.properties:
            raise UnknownProperty('%s is not a declared property' % prop)
        return self.vocabularies.get(prop)

    def get_property(self, prop):
        try:
            return self.properties[prop]
        except KeyError:
            raise UnknownProperty('%s is not a declared property' % prop)

    def is_attribute(self, prop):
        '''datatype properties and enumerated object properties carry values, not links'''
        definition = self.get_property(prop)
        return definition.kind == DATATYPE or prop in self.vocabularies

    def instance_closure(self, types):
        closure = set()
        for t in types:
            if t in self.classes:
                closure |= self.subclass_closure(t)
        return closure

    def domain_admits(self, prop, types):
        domain = self.get_property(prop).domain
        return not domain or bool(domain & self.instance_closure(types))

    def range_admits(self, prop, types):
        definition = self.get_property(prop)
        if definition.kind != OBJECT or not definition.range:
            return True
        return bool(definition.range & self.instance_closure(types))

    def classes_in_domain(self, prop):
        '''declared classes whose instances satisfy the domain of prop'''
        domain = self.get_property(prop).domain
        return sorted((c for c in self.classes if not domain or self.subclass_closure(c) & domain), key=str)

    def max_cardinality(self, types, prop):
        closure = self.instance_closure(types)
        bounds = [r.max for r in self.cardinalities
                  if r.property == prop and r.max is not None and r.on_class in closure]
        return min(bounds) if bounds else None

    def rules_for(self, types):
        closure = self.instance_closure(types)
        return [r for r in self.cardinalities if r.on_class in closure]

    def numeric_properties(self, cls):
        closure = self.subclass_closure(cls)
        return [p for p in sorted(self.properties.values(), key=lambda d: str(d.iri))
                if p.kind == DATATYPE and p.datatype in NUMERIC_DATATYPES and p.domain & closure]

    def enumerated_properties(self, cls):
        closure = self.subclass_closure(cls)
        return [self.properties[p] for p in sorted(self.vocabularies, key=str)
                if self.properties[p].domain & closure]


def _read_list(graph, head):
    items, seen = [], set()
    while head != RDF.nil:
        if head in seen or not graph.has_subject(head):
            raise SchemaError('malformed RDF list at %s' % term_key(head))
        seen.add(head)
        first = graph.value(head, RDF.first)
        rest = graph.value(head, RDF.rest)
        if first is None or rest is None:
            raise SchemaError('malformed RDF list at %s' % term_key(head))
        items.append(first)
        head = rest
    return items


def _comment(graph, subject):
    comments = sorted(str(c) for c in graph.objects(subject, RDFS.comment) if isinstance(c, Literal))
    return '\n'.join(comments) if comments else None


def _is_true(value):
    return isinstance(value, Literal) and str(value).strip().lower() in _TRUE


def _non_negative(value, what):
    text = str(value).strip() if isinstance(value, Literal) else ''
    if not text.isdigit():
        raise SchemaError('%s must be a non-negative integer, got %s' % (what, term_key(value)))
    return int(text)


class _Extractor(object):

    def __init__(self, tbox, main=None):
        self.tbox = tbox
        self.main = main
        self.classes = {}
        self.properties = {}
        self.vocabularies = {}
        self.cardinalities = []

    def run(self):
        declared = set()
        for kind in (OWL.Class, RDFS.Class):
            declared |= set(s for s in self.tbox.subjects(RDF.type, kind) if isinstance(s, URIRef))
        imported = dict(self.main.classes) if self.main is not None else {}
        declared -= set(imported)
        if not declared:
            raise SchemaError('the T-Box declares no owl:Class or rdfs:Class')
        self.declared = declared | set(imported)

        top_entities = sorted(c for c in declared if self.is_top_entity(c))
        if len(top_entities) > 1:
            raise SchemaError('more than one class is marked as top entity: %s' % ', '.join(top_entities))
        top_entity = top_entities[0] if top_entities else None

        for cls in declared:
            self.classes[cls] = ClassDef(
                iri=cls,
                local=local_name(cls),
                parents=frozenset(self.named_parents(cls)),
                comment=_comment(self.tbox, cls),
                is_top_entity=(cls == top_entity),
            )
        for cls, definition in imported.items():
            self.classes[cls] = replace(definition, is_top_entity=False, imported=True)
        self.check_acyclic()

        for kind, rdf_kind in ((OBJECT, OWL.ObjectProperty), (DATATYPE, OWL.DatatypeProperty)):
            for prop in self.tbox.subjects(RDF.type, rdf_kind):
                if not isinstance(prop, URIRef):
                    continue
                if prop in self.properties:
                    raise SchemaError('%s is declared both object and datatype property' % prop)
                self.properties[prop] = self.property_def(prop, kind)

        for cls in sorted(declared):
            self.restrictions(cls)

        for rule in self.cardinalities:
            if rule.property not in self.properties:
                raise SchemaError('restriction on %s refers to undeclared property %s' % (rule.on_class, rule.property))

        model = SchemaModel(
            classes=self.classes,
            properties=self.properties,
            cardinalities=tuple(sorted(self.cardinalities, key=lambda r: (str(r.on_class), str(r.property)))),
            vocabularies=self.vocabularies,
            fingerprint=self.fingerprint(),
            top_entity=top_entity,
            extends=self.main.fingerprint if self.main is not None else None,
            prefixes=self.prefixes(),
        )
        logger.info('extracted schema: %d classes, %d properties, %d cardinality rules, %d vocabularies',
                    len(model.classes), len(model.properties), len(model.cardinalities), len(model.vocabularies))
        return model

    def fingerprint(self):
        text = serialize_turtle(self.tbox)
        if self.main is not None:
            text = self.main.fingerprint + '\n' + text
        return sha256_text(text)

    def prefixes(self):
        prefixes = dict(self.main.prefixes) if self.main is not None else {}
        prefixes.update(self.tbox.prefixes)
        return prefixes

    def is_top_entity(self, cls):
        marker = app_settings.TOP_ENTITY_MARKER
        for predicate in self.tbox.predicates(cls):
            if local_name(predicate) == marker:
                if any(_is_true(v) for v in self.tbox.objects(cls, predicate)):
                    return True
        return False

    def named_parents(self, cls):
        parents = set()
        for parent in self.tbox.objects(cls, RDFS.subClassOf):
            if not isinstance(parent, URIRef) or parent in _IGNORED_PARENTS:
                continue
            if parent not in self.declared:
                raise SchemaError('%s is a subclass of undeclared class %s' % (cls, parent))
            parents.add(parent)
        return parents

    def check_acyclic(self):
        WHITE, GREY, BLACK = 0, 1, 2
        colour = dict.fromkeys(self.classes, WHITE)

        def visit(cls, path):
            colour[cls] = GREY
            for parent in sorted(self.classes[cls].parents):
                if colour[parent] == GREY:
                    raise SchemaError('cyclic subclass chain: %s' % ' -> '.join(path + [parent]))
                if colour[parent] == WHITE:
                    visit(parent, path + [parent])
            colour[cls] = BLACK

        for cls in sorted(self.classes):
            if colour[cls] == WHITE:
                visit(cls, [cls])

    def class_expression(self, node, prop, what):
        '''named classes denoted by a domain/range node (IRI or owl:unionOf)'''
        if isinstance(node, URIRef):
            if node in _IGNORED_PARENTS:
                return set()
            if node not in self.declared:
                raise SchemaError('%s of %s refers to undeclared class %s' % (what, prop, node))
            return {node}
        union = self.tbox.value(node, OWL.unionOf)
        if union is None:
            raise SchemaError('unsupported anonymous %s on %s' % (what, prop))
        members = set()
        for member in _read_list(self.tbox, union):
            members |= self.class_expression(member, prop, what)
        return members

    def property_def(self, prop, kind):
        domain = set()
        for node in self.tbox.objects(prop, RDFS.domain):
            domain |= self.class_expression(node, prop, 'domain')
        ranges = self.tbox.objects(prop, RDFS.range)
        if kind == DATATYPE:
            if len(ranges) > 1:
                raise SchemaError('datatype property %s declares more than one range' % prop)
            datatype = next(iter(ranges)) if ranges else XSD.string
            if not isinstance(datatype, URIRef):
                raise SchemaError('datatype property %s has an anonymous range' % prop)
            if datatype == RDFS.Literal:
                datatype = XSD.string
            if not str(datatype).startswith(str(XSD)) or datatype == URIRef(str(XSD)):
                raise SchemaError('range of datatype property %s is %s, not an XSD datatype' % (prop, datatype))
            range_ = {datatype}
        else:
            range_ = set()
            for node in ranges:
                members = self.tbox.value(node, OWL.oneOf) if isinstance(node, BNode) else None
                if members is not None:
                    self.vocabulary(prop, _read_list(self.tbox, members))
                    continue
                range_ |= self.class_expression(node, prop, 'range')
                for cls in sorted(range_):
                    individuals = sorted(i for i in self.tbox.subjects(RDF.type, cls) if isinstance(i, URIRef))
                    if individuals and prop not in self.vocabularies:
                        self.vocabulary(prop, individuals, by_label=True)
        return PropertyDef(
            iri=prop,
            local=local_name(prop),
            kind=kind,
            domain=frozenset(domain),
            range=frozenset(range_),
            comment=_comment(self.tbox, prop),
        )

    def vocabulary(self, prop, members, by_label=False):
        allowed, seen = [], {}
        for member in members:
            if not isinstance(member, URIRef):
                raise SchemaError('vocabulary of %s contains a non-IRI member' % prop)
            labels = sorted(str(l) for l in self.tbox.objects(member, RDFS.label) if isinstance(l, Literal))
            label = labels[0] if labels else local_name(member)
            key = normalize_label(label)
            if key in seen:
                raise SchemaError('vocabulary of %s repeats label %r' % (prop, label))
            seen[key] = member
            allowed.append((label, member))
        if by_label:
            # instance enumerations carry no order of their own
            allowed.sort()
        self.vocabularies[prop] = Vocabulary(property=prop, allowed=tuple(allowed))

    def restrictions(self, cls):
        for node in self.tbox.objects(cls, RDFS.subClassOf):
            if not isinstance(node, BNode):
                continue
            predicates = self.tbox.predicates(node)
            is_restriction = (OWL.Restriction in self.tbox.types(node) or OWL.onProperty in predicates
                              or any(p in predicates for p in _CARDINALITY_PREDICATES))
            if not is_restriction:
                continue
            prop = self.tbox.value(node, OWL.onProperty)
            if prop is None:
                raise SchemaError('restriction on %s has no owl:onProperty' % cls)
            minimum = maximum = None
            exact = self.tbox.value(node, OWL.cardinality)
            if exact is not None:
                minimum = maximum = _non_negative(exact, 'owl:cardinality')
            value = self.tbox.value(node, OWL.minCardinality)
            if value is not None:
                minimum = _non_negative(value, 'owl:minCardinality')
            value = self.tbox.value(node, OWL.maxCardinality)
            if value is not None:
                maximum = _non_negative(value, 'owl:maxCardinality')
            if minimum is None and maximum is None:
                # value restrictions (someValuesFrom, ...) carry no cardinality
                continue
            if minimum is not None and maximum is not None and minimum > maximum:
                raise SchemaError('restriction on %s/%s has min %d > max %d' % (cls, prop, minimum, maximum))
            self.cardinalities.append(CardinalityRule(on_class=cls, property=prop, min=minimum, max=maximum))


def extract_schema(tbox, main=None):
    '''
        main: the SchemaModel an extension T-Box builds on; its classes are
        imported for domains, ranges and subclassing but get no creation tools
    '''
    return _Extractor(tbox, main).run()


def subclass_closure(schema, cls):
    return schema.subclass_closure(cls)


def allowed_values(schema, prop):
    return schema.allowed_values(prop)


def load_schema(path, main=None):
    return extract_schema(load_turtle(path), main)
