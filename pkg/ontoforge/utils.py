# -*- coding: utf-8 -*-
import hashlib
import json
import re

_CAMEL_BOUNDARY = re.compile(r'(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])')
_NON_ALNUM = re.compile(r'[^A-Za-z0-9]+')


def normalize_label(label):
    '''
        store-grade normalisation: trim, collapse whitespace, casefold
    '''
    return ' '.join(label.split()).casefold()


def snake_case(name):
    '''
        split on case boundaries and non-alphanumerics, lowercase, join with "_"

        >>> snake_case('HeatChillStep')
        'heat_chill_step'
    '''
    parts = []
    for chunk in _NON_ALNUM.split(name):
        parts.extend(p for p in _CAMEL_BOUNDARY.split(chunk) if p)
    return '_'.join(p.lower() for p in parts)


def local_name(iri):
    iri = str(iri)
    for sep in ('#', '/'):
        if sep in iri:
            candidate = iri.rsplit(sep, 1)[1]
            if candidate:
                return candidate
    return iri.rsplit(':', 1)[-1]


def humanize(local):
    '''
        hasStepNumber -> "Step number", unit -> "Unit"
    '''
    if re.match(r'^has[A-Z]', local):
        local = local[3:]
    words = snake_case(local).split('_')
    text = ' '.join(w for w in words if w)
    return text[:1].upper() + text[1:]


def dump_json(obj):
    # deterministic: sorted keys, fixed indentation, trailing newline
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def sha256_text(text):
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def canonical_hash(obj):
    return sha256_text(json.dumps(obj, sort_keys=True, separators=(',', ':'), ensure_ascii=False))


def is_encodable(text):
    '''False for strings holding lone surrogates, which no UTF-8 stream accepts'''
    try:
        text.encode('utf-8')
    except UnicodeEncodeError:
        return False
    return True
