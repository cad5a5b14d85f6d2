# -*- coding: utf-8 -*-
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from .rdf import INTEGER_DATATYPES, URIRef, XSD
from .schema import DATATYPE, OBJECT
from .utils import dump_json, local_name, snake_case

logger = logging.getLogger(__name__)

ENTITY_CREATION = 'entity_creation'
COMPLETION = 'completion'
LINKING = 'linking'
CROSS_DOCUMENT = 'cross_document_linking'
QUERY = 'query'
GROUPS = (ENTITY_CREATION, COMPLETION, LINKING, CROSS_DOCUMENT, QUERY)

# semantic operations a tool can be bound to
CREATE = 'create'
CREATE_QUANTITY = 'create_quantity'
CHECK_EXISTING = 'check_existing'
LINK = 'link'
SET = 'set'

STRING, NUMBER, INTEGER, BOOLEAN, IRI, ENUM = 'string', 'number', 'integer', 'boolean', 'iri', 'enum'

PAPER_TEXT = 'paper_text'
STORE = 'store'
RUN_LOG = 'run_log'
MAIN_STORE = 'main_store'


class CompileException(Exception):
    pass


class CompileError(CompileException):
    pass


class PlanError(CompileException):
    pass


def value_kind(datatype):
    if datatype in INTEGER_DATATYPES:
        return INTEGER
    if datatype in (XSD.decimal, XSD.double, XSD.float):
        return NUMBER
    if datatype == XSD.boolean:
        return BOOLEAN
    if datatype == XSD.anyURI:
        return IRI
    return STRING


@dataclass(frozen=True)
class ArgumentSpec:
    name: str
    value_kind: str
    required: bool
    doc: str = ''
    labels: Tuple[str, ...] = ()
    binding: Optional[URIRef] = None

    def json_schema(self):
        if self.value_kind == IRI:
            schema = {'type': 'string', 'format': 'iri'}
        elif self.value_kind == ENUM:
            schema = {'type': 'string', 'enum': list(self.labels)}
        else:
            schema = {'type': self.value_kind}
        if self.doc:
            schema['description'] = self.doc
        return schema


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    group: str
    operation: str
    arguments: Tuple[ArgumentSpec, ...]
    doc: str
    binding: URIRef

    def argument(self, name):
        for argument in self.arguments:
            if argument.name == name:
                return argument
        return None

    @property
    def is_query(self):
        return self.group == QUERY

    def input_schema(self):
        return {
            'type': 'object',
            'properties': dict((a.name, a.json_schema()) for a in self.arguments),
            'required': [a.name for a in self.arguments if a.required],
        }


@dataclass(frozen=True)
class ToolSet:
    tools: Tuple[ToolDescriptor, ...]
    schema_fingerprint: str

    def __iter__(self):
        return iter(self.tools)

    def __len__(self):
        return len(self.tools)

    def __contains__(self, name):
        return self.get(name) is not None

    def get(self, name):
        for tool in self.tools:
            if tool.name == name:
                return tool
        return None

    @property
    def names(self):
        return [tool.name for tool in self.tools]

    def by_group(self, group):
        return [tool for tool in self.tools if tool.group == group]


def _describe(text, comment):
    if comment:
        return '%s\n\n%s' % (text, comment)
    return text


def _class_names(classes):
    return ', '.join(local_name(c) for c in sorted(classes)) or 'any class'


class _Compiler(object):

    def __init__(self, schema):
        self.schema = schema
        self.tools = {}

    def add(self, tool):
        if tool.name in self.tools:
            raise CompileError('tool name %r is produced by both %s and %s'
                               % (tool.name, self.tools[tool.name].binding, tool.binding))
        names = [a.name for a in tool.arguments]
        if len(set(names)) != len(names):
            raise CompileError('tool %r has colliding argument names: %s' % (tool.name, ', '.join(names)))
        self.tools[tool.name] = tool

    def value_argument(self, name, prop, required, doc):
        vocabulary = self.schema.vocabularies.get(prop.iri)
        if vocabulary is not None:
            return ArgumentSpec(name, ENUM, required, doc, labels=tuple(vocabulary.labels), binding=prop.iri)
        return ArgumentSpec(name, value_kind(prop.datatype), required, doc, binding=prop.iri)

    def attribute_properties(self, cls):
        closure = self.schema.subclass_closure(cls)
        found = [p for p in self.schema.properties.values()
                 if self.schema.is_attribute(p.iri) and p.domain & closure]
        return sorted(found, key=lambda p: snake_case(p.local))

    def run(self):
        for cls in sorted(self.schema.classes):
            self.compile_class(self.schema.classes[cls])
        for prop in sorted(self.schema.properties):
            self.compile_property(self.schema.properties[prop])
        tools = tuple(sorted(self.tools.values(), key=lambda t: t.name))
        logger.info('compiled %d tools for schema %s', len(tools), self.schema.fingerprint[:12])
        return ToolSet(tools=tools, schema_fingerprint=self.schema.fingerprint)

    def compile_class(self, cls):
        snake = snake_case(cls.local)
        if not snake:
            raise CompileError('class %s has no usable local name' % cls.iri)
        self.add(ToolDescriptor(
            name='check_existing_%s' % snake,
            group=QUERY,
            operation=CHECK_EXISTING,
            arguments=(ArgumentSpec('label', STRING, True, 'label to look up'),),
            doc='Look up existing %s instances%s by label (trimmed, whitespace-collapsed, case-folded). '
                'Read-only.' % (cls.local, ' of the main A-Box' if cls.imported else ''),
            binding=cls.iri,
        ))
        if cls.imported:
            return
        arguments = [
            ArgumentSpec('doc_id', STRING, True, 'pipeline document id, e.g. 10.1039.C5DT04764A'),
            ArgumentSpec('label', STRING, True, 'human-readable label of the new instance'),
        ]
        for prop in self.attribute_properties(cls.iri):
            arguments.append(self.value_argument(
                snake_case(prop.local), prop, False, _describe('optional value of %s' % prop.local, prop.comment)))
        self.add(ToolDescriptor(
            name='create_%s' % snake,
            group=ENTITY_CREATION,
            operation=CREATE,
            arguments=tuple(arguments),
            doc=_describe('Create a %s instance, or reuse the existing one with the same label. '
                          'Returns its IRI.' % cls.local, cls.comment),
            binding=cls.iri,
        ))
        numeric = self.schema.numeric_properties(cls.iri)
        enumerated = self.schema.enumerated_properties(cls.iri)
        if numeric and enumerated:
            unit = enumerated[0]
            self.add(ToolDescriptor(
                name='create_%s_quantity' % snake,
                group=ENTITY_CREATION,
                operation=CREATE_QUANTITY,
                arguments=(
                    ArgumentSpec('value', NUMBER, True, 'numeric value (%s)' % numeric[0].local,
                                 binding=numeric[0].iri),
                    self.value_argument('unit', unit, True, 'unit (%s); one of the allowed values' % unit.local),
                ),
                doc=_describe('Create a %s quantity from a numeric value and a unit. '
                              'The unit must be one of the allowed values.' % cls.local, cls.comment),
                binding=cls.iri,
            ))

    def compile_property(self, prop):
        snake = snake_case(prop.local)
        if not snake:
            raise CompileError('property %s has no usable local name' % prop.iri)
        subject = ArgumentSpec('subject_iri', IRI, True,
                               'IRI of an existing %s instance' % _class_names(prop.domain))
        if self.schema.is_attribute(prop.iri):
            self.add(ToolDescriptor(
                name='set_%s' % snake,
                group=COMPLETION,
                operation=SET,
                arguments=(subject, self.value_argument('value', prop, True, 'value of %s' % prop.local)),
                doc=_describe('Set %s on an existing instance.' % prop.local, prop.comment),
                binding=prop.iri,
            ))
        elif prop.kind == OBJECT:
            imported = any(self.schema.classes[c].imported for c in prop.range)
            self.add(ToolDescriptor(
                name='link_%s' % snake,
                group=CROSS_DOCUMENT if imported else LINKING,
                operation=LINK,
                arguments=(subject, ArgumentSpec('object_iri', IRI, True,
                                                 'IRI of an existing %s instance' % _class_names(prop.range))),
                doc=_describe('Link an existing %s to an existing %s via %s.'
                              % (_class_names(prop.domain), _class_names(prop.range), prop.local), prop.comment),
                binding=prop.iri,
            ))


def compile_tools(schema):
    return _Compiler(schema).run()


def emit_manifest(toolset):
    return {
        'schema_fingerprint': toolset.schema_fingerprint,
        'tools': [{
            'name': tool.name,
            'group': tool.group,
            'doc': tool.doc,
            'binding': str(tool.binding),
            'input_schema': tool.input_schema(),
        } for tool in toolset],
    }


def manifest_json(toolset):
    return dump_json(emit_manifest(toolset))


class Iteration(BaseModel):
    model_config = ConfigDict(extra='forbid')

    id: int
    goal: str
    extraction_instruction: str
    kg_instruction: str
    inputs: List[str]
    outputs: List[str]
    sub_iterations: List[dict] = []
    tool_groups: List[str]
    required_tools: List[str]
    entity_scope: List[str] = []


class Plan(BaseModel):
    model_config = ConfigDict(extra='forbid')

    schema_fingerprint: str = ''
    iterations: List[Iteration]

    @model_validator(mode='after')
    def check_ids(self):
        for expected, iteration in enumerate(self.iterations, 1):
            if iteration.id != expected:
                raise ValueError('iteration ids must run 1, 2, 3, ... (found %d at position %d)'
                                 % (iteration.id, expected))
        return self

    def iteration(self, iteration_id):
        for iteration in self.iterations:
            if iteration.id == iteration_id:
                return iteration
        return None

    def to_json(self):
        return dump_json(self.model_dump(mode='json'))


def check_plan(plan, toolset):
    for iteration in plan.iterations:
        for group in iteration.tool_groups:
            if group not in GROUPS:
                raise PlanError('iteration %d names unknown tool group %r' % (iteration.id, group))
        for name in iteration.required_tools:
            if name not in toolset:
                raise PlanError('iteration %d requires unknown tool %r' % (iteration.id, name))
    return plan


def _comments(schema, iris, what):
    lines = []
    for iri in sorted(iris):
        definition = schema.classes.get(iri) or schema.properties.get(iri)
        if definition is not None and definition.comment:
            lines.append('- %s: %s' % (definition.local, definition.comment))
    if not lines:
        return ''
    return '\n%s guidance:\n%s' % (what, '\n'.join(lines))


def generate_plan(schema, toolset):
    top = schema.top_entity
    if top is None:
        raise PlanError('the schema marks no class as top entity')
    top_local = schema.classes[top].local
    top_tools = [t.name for t in toolset.by_group(ENTITY_CREATION)
                 if t.binding == top and t.operation == CREATE]
    related = [c for c in schema.own_classes() if c != top]
    related_create = [t.name for t in toolset.by_group(ENTITY_CREATION) if t.binding != top]
    completion = [t.name for t in toolset.by_group(COMPLETION)]
    linking = [t.name for t in toolset.by_group(LINKING)]
    link_properties = [t.binding for t in toolset.by_group(LINKING)]
    cross = toolset.by_group(CROSS_DOCUMENT)

    iterations = [
        Iteration(
            id=1,
            goal='Create the top-level %s entities.' % top_local,
            extraction_instruction=('Identify every %s reported in the paper text and give each a '
                                    'distinguishing label.%s' % (top_local, _comments(schema, [top], 'Class'))),
            kg_instruction=('Create top-level entities only, no related entities. Call check_existing_%s '
                            'before creating; create each %s exactly once with %s.'
                            % (snake_case(top_local), top_local, ', '.join(top_tools))),
            inputs=[PAPER_TEXT, STORE],
            outputs=[STORE, RUN_LOG],
            tool_groups=[ENTITY_CREATION],
            required_tools=top_tools,
            entity_scope=[str(top)],
        ),
        Iteration(
            id=2,
            goal='Create the related entities and complete their attributes.',
            extraction_instruction=('For each %s, extract the related %s entities and their attribute '
                                    'values.%s' % (top_local, _class_names(related),
                                                   _comments(schema, related, 'Class'))),
            kg_instruction=('Create related entities and set attribute values. Use only values the tools '
                            'accept; on a rejected call read error_type, field and allowed_values and retry '
                            'with corrected input. Never repeat an identical call.'),
            inputs=[PAPER_TEXT, STORE],
            outputs=[STORE, RUN_LOG],
            tool_groups=[ENTITY_CREATION, COMPLETION],
            required_tools=related_create + completion,
        ),
        Iteration(
            id=3,
            goal='Link the entities and finalise the store.',
            extraction_instruction=('Extract the relations between the entities already in the store.%s'
                                    % _comments(schema, link_properties, 'Property')),
            kg_instruction=('Link existing instances only; IRIs must come from earlier tool results. '
                            'Fill remaining attributes, then finalise; the run is done when no '
                            'cardinality violation remains.'),
            inputs=[PAPER_TEXT, STORE],
            outputs=[STORE, RUN_LOG],
            tool_groups=[LINKING, COMPLETION],
            required_tools=linking,
        ),
    ]
    if cross:
        iterations.append(Iteration(
            id=4,
            goal='Link the new entities into the main A-Box.',
            extraction_instruction=('For each new entity, find the entities of the main A-Box it refers to.%s'
                                    % _comments(schema, [t.binding for t in cross], 'Property')),
            kg_instruction=('Reuse IRIs of the main A-Box; find them with the check_existing tools of its '
                            'classes. Never recreate an entity the main A-Box already holds.'),
            inputs=[PAPER_TEXT, STORE, MAIN_STORE],
            outputs=[STORE, RUN_LOG],
            tool_groups=[CROSS_DOCUMENT],
            required_tools=[t.name for t in cross],
        ))
    plan = Plan(schema_fingerprint=toolset.schema_fingerprint, iterations=iterations)
    return check_plan(plan, toolset)
