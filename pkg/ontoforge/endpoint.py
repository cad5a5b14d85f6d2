# -*- coding: utf-8 -*-
'''
    MCP-style JSON-RPC 2.0 over newline-delimited stdio
'''
import json
import logging

from . import __version__
from .compiler import compile_tools
from .conf import app_settings
from .runtime import Session, outcome_dict, validate_graph
from .schema import load_schema
from .turtle import load_turtle

logger = logging.getLogger(__name__)

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
NOT_INITIALIZED = -32002


class EndpointException(Exception):
    pass


class RpcError(EndpointException):
    def __init__(self, code, message):
        self.code = code
        self.message = message
        super(RpcError, self).__init__('%d %s' % (code, message))

    def to_dict(self):
        return {'code': self.code, 'message': self.message}


class ServerState(object):

    def __init__(self, session):
        self.session = session
        self.toolset = session.toolset
        self.initialized = False

    @classmethod
    def from_tbox(cls, tbox_path, doc_id, workdir=None, feedback_enabled=True, main_tbox=None, main_abox=None):
        main = load_schema(main_tbox) if main_tbox else None
        schema = load_schema(tbox_path, main=main)
        toolset = compile_tools(schema)
        main_graph = load_turtle(main_abox) if main_abox else None
        return cls(Session.open(schema, toolset, doc_id, workdir=workdir, feedback_enabled=feedback_enabled,
                                main_graph=main_graph))


def _tool_entries(toolset):
    return [{
        'name': tool.name,
        'description': tool.doc,
        'inputSchema': tool.input_schema(),
        '_meta': {'group': tool.group, 'binding': str(tool.binding)},
    } for tool in toolset]


def _text_result(payload, is_error):
    return {
        'content': [{'type': 'text', 'text': json.dumps(payload, ensure_ascii=False)}],
        'isError': is_error,
    }


def _initialize(state, params):
    requested = params.get('protocolVersion')
    supported = app_settings.PROTOCOL_VERSION
    if requested is not None and requested != supported:
        logger.warning('client requested protocol %r, serving %r', requested, supported)
    state.initialized = True
    logger.info('initialized session %s', state.session.doc_id)
    return {
        'protocolVersion': supported,
        'serverInfo': {'name': app_settings.SERVER_NAME, 'version': __version__},
        'capabilities': {'tools': {}},
    }


def _ping(state, params):
    return {}


def _initialized(state, params):
    return None


def _tools_list(state, params):
    return {'tools': _tool_entries(state.toolset)}


def _tools_call(state, params):
    name = params.get('name')
    arguments = params.get('arguments', {})
    if not isinstance(name, str):
        raise RpcError(INVALID_PARAMS, 'tools/call needs a string "name"')
    if arguments is None:
        arguments = {}
    if not isinstance(arguments, dict):
        raise RpcError(INVALID_PARAMS, '"arguments" must be an object')
    if name not in state.toolset:
        raise RpcError(INVALID_PARAMS, 'unknown tool %r' % name)
    outcome = state.session.invoke(name, arguments)
    return _text_result(outcome.to_dict(), not outcome.ok)


def _finalize(state, params):
    outcome = state.session.finalize()
    if isinstance(outcome, list):
        return _text_result(outcome_dict(outcome), True)
    return _text_result(outcome.to_dict(), False)


def _validate(state, params):
    reports = validate_graph(state.session.graph, state.session.schema, state.session.main_graph)
    return {'ok': not reports, 'violations': [r.to_dict() for r in reports]}


METHODS = {
    'initialize': _initialize,
    'ping': _ping,
    'notifications/initialized': _initialized,
    'tools/list': _tools_list,
    'tools/call': _tools_call,
    'session/finalize': _finalize,
    'session/validate': _validate,
}
# callable before initialize
OPEN_METHODS = frozenset(['initialize', 'ping', 'notifications/initialized'])


def _error(msg_id, code, message):
    return {'jsonrpc': '2.0', 'id': msg_id, 'error': {'code': code, 'message': message}}


def _valid_id(value):
    return isinstance(value, (str, int)) and not isinstance(value, bool)


def handle(state, msg):
    '''
        one decoded message in, the response (or None for notifications) out
    '''
    if not isinstance(msg, dict):
        return _error(None, INVALID_REQUEST, 'a request must be a JSON object')
    is_notification = 'id' not in msg
    msg_id = msg.get('id')
    if not is_notification and msg_id is not None and not _valid_id(msg_id):
        return _error(None, INVALID_REQUEST, '"id" must be a string or an integer')
    if msg.get('jsonrpc') != '2.0' or not isinstance(msg.get('method'), str):
        if is_notification:
            return None
        return _error(msg_id, INVALID_REQUEST, 'expected {"jsonrpc": "2.0", "method": ...}')
    method = msg['method']
    try:
        handler = METHODS.get(method)
        if handler is None:
            raise RpcError(METHOD_NOT_FOUND, 'method %r not found' % method)
        if not state.initialized and method not in OPEN_METHODS:
            raise RpcError(NOT_INITIALIZED, 'server not initialized')
        params = msg.get('params', {})
        if params is None:
            params = {}
        if not isinstance(params, dict):
            raise RpcError(INVALID_PARAMS, '"params" must be an object')
        result = handler(state, params)
    except RpcError as e:
        if is_notification:
            logger.debug('dropped error for notification %s: %s', method, e)
            return None
        return _error(msg_id, e.code, e.message)
    except Exception as e:
        logger.exception('internal error handling %s', method)
        if is_notification:
            return None
        return _error(msg_id, INTERNAL_ERROR, 'internal error: %s' % e)
    if is_notification:
        return None
    return {'jsonrpc': '2.0', 'id': msg_id, 'result': result}


def handle_line(state, line):
    line = line.strip()
    if not line:
        return None
    try:
        msg = json.loads(line)
    except (ValueError, RecursionError):
        return json.dumps(_error(None, PARSE_ERROR, 'parse error'))
    if isinstance(msg, list):
        return json.dumps(_error(None, INVALID_REQUEST, 'batch requests are not supported'))
    response = handle(state, msg)
    if response is None:
        return None
    try:
        return json.dumps(response)
    except (TypeError, ValueError):
        logger.exception('unserializable response')
        return json.dumps(_error(msg.get('id') if _valid_id(msg.get('id')) else None,
                                 INTERNAL_ERROR, 'internal error: unserializable response'))


def serve(state, stdin, stdout):
    '''
        strictly sequential request loop until EOF
    '''
    logger.info('serving %d tools on stdio', len(state.toolset))
    for line in stdin:
        response = handle_line(state, line)
        if response is not None:
            stdout.write(response + '\n')
            stdout.flush()
    logger.info('stdin closed, server stopping')
