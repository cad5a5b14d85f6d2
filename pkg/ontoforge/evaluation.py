# -*- coding: utf-8 -*-
'''
    graph -> JSON records via fixed pattern queries, optimal record
    alignment, and slot-level precision / recall / F1
'''
import csv
import glob
import json
import logging
import os
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Dict, List, Literal as LiteralType, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.optimize import linear_sum_assignment

from .conf import app_settings
from .rdf import BNode, Literal, RDF, URIRef, term_key
from .turtle import load_turtle

logger = logging.getLogger(__name__)

NONE = 'none'
CASEFOLD = 'casefold'
UNITLABEL = 'unitlabel'

_LITERAL = re.compile(r'"((?:[^"\\]|\\.)*)"(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^(\S+))?\Z')
_PNAME = re.compile(r'([A-Za-z][\w\-]*)?:([\w\-.]*)\Z')


class EvaluationException(Exception):
    pass


class QueryError(EvaluationException):
    pass


class Slot(BaseModel):
    model_config = ConfigDict(extra='forbid')

    name: str
    var: str
    kind: LiteralType['string', 'number', 'integer'] = 'string'
    normalize: LiteralType['none', 'casefold', 'unitlabel'] = NONE

    @field_validator('var')
    @classmethod
    def check_var(cls, value):
        if not value.startswith('?') or len(value) < 2:
            raise ValueError('%r is not a variable' % value)
        return value


class ProjectionQuery(BaseModel):
    model_config = ConfigDict(extra='forbid')

    prefixes: Dict[str, str] = {}
    patterns: List[Tuple[str, str, str]]
    optionals: List[Tuple[str, str, str]] = []
    group_by: str

    @model_validator(mode='after')
    def check_group_by(self):
        if not any(self.group_by in pattern for pattern in self.patterns):
            raise ValueError('group_by %s does not occur in the required patterns' % self.group_by)
        return self


class RecordSchema(BaseModel):
    model_config = ConfigDict(extra='forbid')

    category: str
    slots: List[Slot]
    query: ProjectionQuery

    @field_validator('slots')
    @classmethod
    def check_unique(cls, slots):
        names = [s.name for s in slots]
        if len(set(names)) != len(names):
            raise ValueError('slot names must be unique')
        return slots

    def slot(self, name):
        for slot in self.slots:
            if slot.name == name:
                return slot
        return None

    @property
    def slot_names(self):
        return [s.name for s in self.slots]


def load_record_schema(path):
    with open(path, 'r', encoding='utf-8') as f:
        return RecordSchema.model_validate_json(f.read())


def read_records(path, schema):
    '''records of a *.ttl graph (projected) or a JSON array file'''
    if path.endswith('.ttl'):
        return project_records(load_turtle(path), schema)
    with open(path, 'r', encoding='utf-8') as f:
        records = json.load(f)
    if not isinstance(records, list) or not all(isinstance(r, dict) for r in records):
        raise EvaluationException('%s is not a JSON array of records' % path)
    return records


def paper_files(directory):
    '''{doi: path}; *.ttl graphs or *.json record files'''
    papers = {}
    for path in sorted(glob.glob(os.path.join(directory, '*.ttl')) + glob.glob(os.path.join(directory, '*.json'))):
        name = os.path.basename(path)
        if name.endswith('.grounding.json'):
            continue
        papers.setdefault(os.path.splitext(name)[0], path)
    return papers


def _unescape(text):
    return re.sub(r'\\(.)', lambda m: {'n': '\n', 't': '\t', 'r': '\r'}.get(m.group(1), m.group(1)), text)


class _Term(object):
    __slots__ = ('var', 'value')

    def __init__(self, var=None, value=None):
        self.var = var
        self.value = value


def _parse_term(text, prefixes):
    if text.startswith('?'):
        return _Term(var=text)
    if text == 'a':
        return _Term(value=RDF.type)
    if text.startswith('<') and text.endswith('>'):
        return _Term(value=URIRef(text[1:-1]))
    if text.startswith('"'):
        match = _LITERAL.match(text)
        if match is None:
            raise QueryError('malformed literal %s' % text)
        lexical, lang, datatype = match.groups()
        if datatype is not None:
            return _Term(value=Literal(_unescape(lexical), datatype=_parse_term(datatype, prefixes).value))
        return _Term(value=Literal(_unescape(lexical), lang=lang))
    match = _PNAME.match(text)
    if match is not None:
        prefix = match.group(1) or ''
        if prefix not in prefixes:
            raise QueryError('unknown prefix %r in %s' % (prefix, text))
        return _Term(value=URIRef(prefixes[prefix] + match.group(2)))
    raise QueryError('cannot read pattern term %r' % text)


def _compile(query):
    def compile_patterns(patterns):
        return [tuple(_parse_term(t, query.prefixes) for t in pattern) for pattern in patterns]
    return compile_patterns(query.patterns), compile_patterns(query.optionals)


def _variables(patterns):
    return set(t.var for pattern in patterns for t in pattern if t.var)


def _match(graph, pattern, binding):
    query = []
    for term in pattern:
        if term.var is None:
            query.append(term.value)
        else:
            query.append(binding.get(term.var))
    for triple in graph.triples(*query):
        extended = dict(binding)
        for term, value in zip(pattern, triple):
            if term.var is None:
                continue
            if extended.get(term.var, value) != value:
                break
            extended[term.var] = value
        else:
            yield extended


def _solve(graph, patterns, binding=None):
    '''backtracking join over the required patterns'''
    if binding is None:
        binding = {}
    if not patterns:
        yield binding
        return
    for extended in _match(graph, patterns[0], binding):
        for solution in _solve(graph, patterns[1:], extended):
            yield solution


def _left_join(graph, solutions, pattern):
    '''
        optional extension; a pattern sharing no bound variable with the
        solution leaves it unchanged
    '''
    variables = [t.var for t in pattern if t.var]
    for binding in solutions:
        if variables and not any(v in binding for v in variables):
            yield binding
            continue
        extended = list(_match(graph, pattern, binding))
        if extended:
            for e in extended:
                yield e
        else:
            yield binding


def _slot_string(term):
    if isinstance(term, BNode):
        return None
    return str(term)


def project_records(graph, schema):
    '''
        one record (slot name -> string) per distinct group_by binding,
        sorted by that binding; slots without a value are absent
    '''
    required, optionals = _compile(schema.query)
    bound = _variables(required) | _variables(optionals)
    for slot in schema.slots:
        if slot.var not in bound:
            raise QueryError('slot %s uses %s, which no pattern binds' % (slot.name, slot.var))

    solutions = _solve(graph, required)
    for pattern in optionals:
        solutions = _left_join(graph, solutions, pattern)

    groups = {}
    for binding in solutions:
        key = binding[schema.query.group_by]
        values = groups.setdefault(key, {})
        for slot in schema.slots:
            term = binding.get(slot.var)
            text = None if term is None else _slot_string(term)
            if text is None:
                continue
            if slot.name not in values or text < values[slot.name]:
                values[slot.name] = text
    records = [groups[key] for key in sorted(groups, key=term_key)]
    logger.debug('projected %d %s record(s)', len(records), schema.category)
    return records


def _canonical_number(text, integer):
    try:
        number = Decimal(text)
    except InvalidOperation:
        return text
    if not number.is_finite():
        return text
    if integer:
        if number != number.to_integral_value():
            return text
        return str(int(number))
    if number == 0:
        return '0'
    return format(number.normalize(), 'f')


def _unit_label(text):
    labels = app_settings.UNIT_LABELS
    if text in labels:
        return labels[text]
    folded = text.casefold()
    for label in sorted(labels.values()):
        if label.casefold() == folded:
            return label
    return text


def normalize_value(slot, value):
    '''the comparison form of a slot value; '' means empty'''
    if value is None:
        return ''
    text = ' '.join(str(value).split())
    if not text:
        return ''
    if slot.kind == 'number':
        text = _canonical_number(text, integer=False)
    elif slot.kind == 'integer':
        text = _canonical_number(text, integer=True)
    if slot.normalize == CASEFOLD:
        text = text.casefold()
    elif slot.normalize == UNITLABEL:
        text = _unit_label(text)
    return text


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    by_slot: Dict[str, 'Counts'] = field(default_factory=dict, compare=False)

    def __add__(self, other):
        by_slot = dict((name, Counts(c.tp, c.fp, c.fn)) for name, c in self.by_slot.items())
        for name, c in other.by_slot.items():
            by_slot[name] = by_slot.get(name, Counts()) + Counts(c.tp, c.fp, c.fn)
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, by_slot)

    @property
    def errors(self):
        return self.fp + self.fn

    def tally(self, slot, tp=0, fp=0, fn=0):
        self.tp += tp
        self.fp += fp
        self.fn += fn
        counts = self.by_slot.setdefault(slot, Counts())
        counts.tp += tp
        counts.fp += fp
        counts.fn += fn

    def to_dict(self):
        d = {'tp': self.tp, 'fp': self.fp, 'fn': self.fn}
        if self.by_slot:
            d['by_slot'] = dict((name, c.to_dict()) for name, c in sorted(self.by_slot.items()))
        return d


def _normalized(records, schema):
    return [dict((slot.name, normalize_value(slot, record.get(slot.name))) for slot in schema.slots)
            for record in records]


def _agreement(pred, gold, names):
    return sum(1 for name in names if pred[name] and pred[name] == gold[name])


def assign(matrix):
    '''
        (row, column) pairs of a one-to-one assignment maximising the total
    '''
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return []
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return list(zip(rows.tolist(), cols.tolist()))


def match_records(predicted, gold, schema):
    names = schema.slot_names
    pred = _normalized(predicted, schema)
    truth = _normalized(gold, schema)
    counts = Counts(by_slot=dict((name, Counts()) for name in names))

    matrix = [[_agreement(p, g, names) for g in truth] for p in pred]
    pairs = assign(matrix) if pred and truth else []
    for i, j in pairs:
        for name in names:
            p, g = pred[i][name], truth[j][name]
            if p and p == g:
                counts.tally(name, tp=1)
                continue
            if p:
                counts.tally(name, fp=1)
            if g:
                counts.tally(name, fn=1)
    paired_pred = set(i for i, _ in pairs)
    paired_gold = set(j for _, j in pairs)
    for i, record in enumerate(pred):
        if i not in paired_pred:
            for name in names:
                if record[name]:
                    counts.tally(name, fp=1)
    for j, record in enumerate(truth):
        if j not in paired_gold:
            for name in names:
                if record[name]:
                    counts.tally(name, fn=1)
    return counts


@dataclass(frozen=True)
class Metrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction

    def to_dict(self):
        return {'precision': float(self.precision), 'recall': float(self.recall), 'f1': float(self.f1)}


def score(counts):
    precision = Fraction(counts.tp, counts.tp + counts.fp) if counts.tp + counts.fp else Fraction(1)
    recall = Fraction(counts.tp, counts.tp + counts.fn) if counts.tp + counts.fn else Fraction(1)
    if precision + recall == 0:
        f1 = Fraction(0)
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(precision, recall, f1)


def aggregate(per_category):
    '''
        (micro, macro); macro F1 is the mean of the per-category F1s
    '''
    total = Counts()
    for counts in per_category.values():
        total = total + counts
    micro = score(total)
    if not per_category:
        return micro, micro
    metrics = [score(c) for c in per_category.values()]
    n = len(metrics)
    macro = Metrics(sum((m.precision for m in metrics), Fraction(0)) / n,
                    sum((m.recall for m in metrics), Fraction(0)) / n,
                    sum((m.f1 for m in metrics), Fraction(0)) / n)
    return micro, macro


@dataclass(frozen=True)
class ErrorAnatomy:
    slots: Tuple[Tuple[str, int, int], ...]
    papers: Tuple[Tuple[str, int, Fraction], ...]
    paper_curve: Tuple[Tuple[Fraction, Fraction], ...]
    slot_curve: Tuple[Tuple[Fraction, Fraction], ...]
    f1: Fraction
    pareto: Tuple[Tuple[int, Fraction], ...]

    def to_dict(self):
        return {
            'slots': [{'slot': s, 'fp': fp, 'fn': fn} for s, fp, fn in self.slots],
            'papers': [{'paper': p, 'errors': e, 'share': float(share)} for p, e, share in self.papers],
            'paper_curve': [[float(x), float(y)] for x, y in self.paper_curve],
            'slot_curve': [[float(x), float(y)] for x, y in self.slot_curve],
            'f1': float(self.f1),
            'pareto': [[n, float(f1)] for n, f1 in self.pareto],
        }


def _concentration(errors):
    '''cumulative error share over items sorted by descending error count'''
    errors = sorted(errors, reverse=True)
    total = sum(errors)
    n = len(errors)
    points = [(Fraction(0), Fraction(0))]
    running = 0
    for i, e in enumerate(errors, 1):
        running += e
        points.append((Fraction(i, n), Fraction(running, total) if total else Fraction(0)))
    return tuple(points)


def error_anatomy(per_paper):
    total = Counts()
    for counts in per_paper.values():
        total = total + counts
    ranked = sorted(total.by_slot.items(), key=lambda item: (-item[1].errors, item[0]))
    slots = tuple((name, c.fp, c.fn) for name, c in ranked)

    all_errors = total.errors
    papers = sorted(((paper, c.errors) for paper, c in per_paper.items()), key=lambda item: (-item[1], item[0]))
    papers = tuple((paper, e, Fraction(e, all_errors) if all_errors else Fraction(0)) for paper, e in papers)

    pareto = []
    tp, fp, fn = total.tp, total.fp, total.fn
    for n, (name, slot_fp, slot_fn) in enumerate(slots, 1):
        # recovered gold items become tp, spurious predictions disappear
        tp, fp, fn = tp + slot_fn, fp - slot_fp, fn - slot_fn
        pareto.append((n, score(Counts(tp, fp, fn)).f1))

    return ErrorAnatomy(
        slots=slots,
        papers=papers,
        paper_curve=_concentration([e for _, e, _ in papers]),
        slot_curve=_concentration([fp + fn for _, fp, fn in slots]),
        f1=score(total).f1,
        pareto=tuple(pareto),
    )


@dataclass(frozen=True)
class StepStructure:
    '''structural error proxies of one paper's step records'''
    steps: int
    inconsistencies: int
    placeholders: int

    MEASURES = ('inconsistencies', 'steps', 'placeholders')

    def values(self):
        return tuple(getattr(self, name) for name in self.MEASURES)

    def to_dict(self):
        return dict(zip(self.MEASURES, self.values()))


def _placeholder(value):
    if value is None:
        return False
    tokens = set(' '.join(t.split()).casefold() for t in app_settings.PLACEHOLDER_VALUES)
    text = ' '.join(str(value).split()).casefold()
    return bool(text) and text in tokens


def step_structure(records, schema, number_slot='step_number', group_slot=None):
    '''
        inconsistencies: step numbers that are missing, not a positive
        integer, repeated or skipped within a group (1..max per group);
        placeholders: other slot values that are placeholder tokens
    '''
    number = schema.slot(number_slot)
    if number is None:
        raise EvaluationException('record schema %s has no slot %r' % (schema.category, number_slot))
    group = schema.slot(group_slot) if group_slot else None
    if group_slot and group is None:
        raise EvaluationException('record schema %s has no slot %r' % (schema.category, group_slot))

    inconsistencies = 0
    placeholders = 0
    numbers = {}
    for record in records:
        key = normalize_value(group, record.get(group_slot)) if group is not None else ''
        seen = numbers.setdefault(key, [])
        try:
            n = int(normalize_value(number, record.get(number_slot)))
        except ValueError:
            n = 0
        if n < 1:
            inconsistencies += 1
        else:
            seen.append(n)
        placeholders += sum(1 for slot in schema.slots
                            if slot.name != number_slot and _placeholder(record.get(slot.name)))
    for seen in numbers.values():
        distinct = set(seen)
        inconsistencies += len(seen) - len(distinct)
        if distinct:
            inconsistencies += max(distinct) - len(distinct)
    return StepStructure(len(records), inconsistencies, placeholders)


def _delta(full, ablated):
    return tuple(a - f for f, a in zip(full.values(), ablated.values()))


@dataclass(frozen=True)
class AblationComparison:
    '''
        per-paper structure of paired full and ablated runs; deltas are
        ablated minus full, so positive means the ablation made it worse
    '''
    rows: Tuple[Tuple[str, StepStructure, StepStructure], ...]
    intervals: Tuple[Tuple[float, float], ...]

    def deltas(self):
        return [_delta(full, ablated) for _, full, ablated in self.rows]

    def mean_delta(self):
        deltas = self.deltas()
        if not deltas:
            return tuple(Fraction(0) for _ in StepStructure.MEASURES)
        return tuple(Fraction(sum(column), len(deltas)) for column in zip(*deltas))

    def to_dict(self):
        measures = StepStructure.MEASURES
        return {
            'papers': [{'paper': paper, 'full': full.to_dict(), 'ablated': ablated.to_dict(),
                        'delta': dict(zip(measures, delta))}
                       for (paper, full, ablated), delta in zip(self.rows, self.deltas())],
            'mean_delta': dict((name, float(mean)) for name, mean in zip(measures, self.mean_delta())),
            'interval': dict((name, [low, high]) for name, (low, high) in zip(measures, self.intervals)),
        }


def bootstrap_interval(deltas, resamples=None, seed=0, level=0.95):
    '''
        percentile bootstrap interval of the mean of each column, one
        (low, high) per column
    '''
    if resamples is None:
        resamples = app_settings.BOOTSTRAP_RESAMPLES
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size == 0:
        return ()
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(deltas), size=(resamples, len(deltas)))
    means = deltas[picks].mean(axis=1)
    tail = (1 - level) / 2 * 100
    low, high = np.percentile(means, [tail, 100 - tail], axis=0)
    return tuple(zip(low.tolist(), high.tolist()))


def compare_ablation(full, ablated, schema, number_slot='step_number', group_slot=None, resamples=None, seed=0):
    '''
        full, ablated: {paper: records}; only papers present in both are
        compared
    '''
    for paper in sorted(set(full) ^ set(ablated)):
        logger.warning('paper %s appears in only one run; it is left out of the comparison', paper)
    rows = tuple((paper,
                  step_structure(full[paper], schema, number_slot, group_slot),
                  step_structure(ablated[paper], schema, number_slot, group_slot))
                 for paper in sorted(set(full) & set(ablated)))
    intervals = bootstrap_interval([_delta(f, a) for _, f, a in rows], resamples, seed)
    if not intervals:
        intervals = tuple((0.0, 0.0) for _ in StepStructure.MEASURES)
    return AblationComparison(rows, intervals)


CSV_COLUMNS = ('DOI', 'TP', 'FP', 'FN', 'Precision', 'Recall', 'F1')


def _row(name, counts):
    metrics = score(counts)
    return [name, counts.tp, counts.fp, counts.fn,
            '%.3f' % metrics.precision, '%.3f' % metrics.recall, '%.3f' % metrics.f1]


def write_score_table(per_paper, f):
    '''
        per-paper rows sorted by DOI, then the Overall (micro) row
    '''
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    total = Counts()
    for paper in sorted(per_paper):
        writer.writerow(_row(paper, per_paper[paper]))
        total = total + per_paper[paper]
    writer.writerow(_row('Overall', total))


def read_counts_table(f):
    '''{doi: Counts} from a table with at least DOI, TP, FP, FN columns'''
    reader = csv.DictReader(f)
    missing = set(('DOI', 'TP', 'FP', 'FN')) - set(reader.fieldnames or ())
    if missing:
        raise EvaluationException('counts table lacks column(s) %s' % ', '.join(sorted(missing)))
    per_paper = {}
    for row in reader:
        if row['DOI'].strip() == 'Overall':
            continue
        try:
            per_paper[row['DOI'].strip()] = Counts(int(row['TP']), int(row['FP']), int(row['FN']))
        except ValueError:
            raise EvaluationException('row %s: counts must be integers' % row['DOI'])
    return per_paper
