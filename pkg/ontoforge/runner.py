# -*- coding: utf-8 -*-
'''
    scripted stand-in for the extraction agent: replays a tool-call trace
    against an endpoint, plan iteration by plan iteration, repairing
    rejected calls from an alias table
'''
import json
import logging
import os
import re
import subprocess
import sys
from typing import Any, Dict, List, Optional

from django.conf import settings
from pydantic import BaseModel, ConfigDict, RootModel, model_validator

from .compiler import ENTITY_CREATION, QUERY
from .conf import app_settings
from .endpoint import ServerState, handle_line

logger = logging.getLogger(__name__)

_REFERENCE = re.compile(r'\$([A-Za-z_][A-Za-z0-9_]*)\Z')

OK = 'ok'
REPAIRED = 'repaired'
UNREPAIRED = 'unrepaired'
SKIPPED_POLICY = 'skipped_policy'
SKIPPED_UNBOUND = 'skipped_unbound'


class RunnerException(Exception):
    pass


class EndpointDown(RunnerException):
    pass


class EndpointError(RunnerException):
    def __init__(self, code, message):
        self.code = code
        self.message = message
        super(EndpointError, self).__init__('%s %s' % (code, message))


class TraceError(RunnerException):
    pass


class RepairTableError(RunnerException):
    pass


class TraceStep(BaseModel):
    model_config = ConfigDict(extra='forbid')

    iteration_id: int
    tool: str
    args: Dict[str, Any] = {}
    bind: Optional[str] = None


class Trace(BaseModel):
    model_config = ConfigDict(extra='forbid')

    steps: List[TraceStep] = []

    @model_validator(mode='after')
    def check_order(self):
        last = None
        for step in self.steps:
            if last is not None and step.iteration_id < last:
                raise ValueError('iteration ids must be non-decreasing (%d after %d)' % (step.iteration_id, last))
            last = step.iteration_id
        return self


class RepairTable(RootModel[Dict[str, Dict[str, str]]]):
    '''
        per-argument alias maps, e.g. {"unit": {"C": "degree Celsius"}}
    '''

    def aliases(self, field):
        return self.root.get(field, {})

    def check_against(self, tools):
        for field, aliases in sorted(self.root.items()):
            allowed = set()
            for tool in tools.values():
                schema = tool['inputSchema']['properties'].get(field, {})
                allowed |= set(schema.get('enum', ()))
            if not allowed:
                raise RepairTableError('no tool has an enumerated argument %r' % field)
            for alias, target in sorted(aliases.items()):
                if target not in allowed:
                    raise RepairTableError('alias %r -> %r: target is not an allowed value of %r'
                                           % (alias, target, field))
        return self


class IterationStats(BaseModel):
    calls_total: int = 0
    calls_ok: int = 0
    violations: int = 0
    repairs_attempted: int = 0
    repairs_succeeded: int = 0
    violations_unrepaired: int = 0
    policy_violations: int = 0
    steps_skipped: int = 0


class StepRecord(BaseModel):
    iteration_id: int
    tool: str
    status: str
    attempts: int = 0


class RunReport(IterationStats):
    final_status: str = 'incomplete'
    final_reports: List[dict] = []
    per_iteration: Dict[int, IterationStats] = {}
    steps: List[StepRecord] = []

    def count(self, iteration_id, name, n=1):
        setattr(self, name, getattr(self, name) + n)
        stats = self.per_iteration.setdefault(iteration_id, IterationStats())
        setattr(stats, name, getattr(stats, name) + n)


def apply_repair(report, args, repair):
    '''
        args with the one reported field replaced by its alias target, or None
    '''
    if not report.get('retryable'):
        return None
    field = report.get('field')
    if field is None or not isinstance(args.get(field), str):
        return None
    target = repair.aliases(field).get(args[field])
    if target is None or target == args[field]:
        return None
    allowed = report.get('allowed_values')
    if allowed is not None and target not in allowed:
        return None
    amended = dict(args)
    amended[field] = target
    return amended


class Endpoint(object):
    '''
        request(method, params) -> result, raising EndpointError for
        JSON-RPC errors
    '''

    def __init__(self):
        self._next_id = 0

    def exchange(self, line):
        raise NotImplementedError

    def request(self, method, params=None):
        self._next_id += 1
        msg = {'jsonrpc': '2.0', 'id': self._next_id, 'method': method, 'params': params or {}}
        response = json.loads(self.exchange(json.dumps(msg, ensure_ascii=False)))
        if response.get('id') != self._next_id:
            raise EndpointError(None, 'response id %r does not match request %r' % (response.get('id'), self._next_id))
        if 'error' in response:
            raise EndpointError(response['error'].get('code'), response['error'].get('message'))
        return response['result']

    def notify(self, method, params=None):
        self.send(json.dumps({'jsonrpc': '2.0', 'method': method, 'params': params or {}}))

    def send(self, line):
        raise NotImplementedError

    def initialize(self):
        result = self.request('initialize', {'protocolVersion': app_settings.PROTOCOL_VERSION})
        self.notify('notifications/initialized')
        return result

    def call_tool(self, name, arguments):
        '''(is_error, outcome dict)'''
        result = self.request('tools/call', {'name': name, 'arguments': arguments})
        return result['isError'], json.loads(result['content'][0]['text'])

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class LocalEndpoint(Endpoint):
    '''
        in-process server, still speaking the wire format
    '''

    def __init__(self, state):
        super(LocalEndpoint, self).__init__()
        self.state = state

    def exchange(self, line):
        response = handle_line(self.state, line)
        if response is None:
            raise EndpointError(None, 'no response to a request')
        return response

    def send(self, line):
        handle_line(self.state, line)


class SubprocessEndpoint(Endpoint):
    '''
        spawns the serve command and talks to it over its stdio
    '''

    def __init__(self, tbox, doc_id, workdir, feedback_enabled=True, settings_module=None):
        super(SubprocessEndpoint, self).__init__()
        command = [sys.executable, '-m', 'django', 'serve',
                   '--settings', settings_module or os.environ.get('DJANGO_SETTINGS_MODULE') or settings.SETTINGS_MODULE,
                   '--tbox', tbox, '--doc-id', doc_id, '--workdir', workdir]
        if not feedback_enabled:
            command.append('--no-feedback')
        env = dict(os.environ)
        env['PYTHONPATH'] = os.pathsep.join(p for p in sys.path if p)
        logger.info('spawning %s', ' '.join(command))
        try:
            self.process = subprocess.Popen(command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                            env=env, encoding='utf-8', bufsize=1)
        except OSError as e:
            raise EndpointDown('could not start the endpoint: %s' % e)

    def send(self, line):
        if self.process.poll() is not None:
            raise EndpointDown('endpoint exited with status %s' % self.process.returncode)
        try:
            self.process.stdin.write(line + '\n')
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise EndpointDown('endpoint closed its input: %s' % e)

    def exchange(self, line):
        self.send(line)
        response = self.process.stdout.readline()
        if not response:
            raise EndpointDown('endpoint closed its output')
        return response

    def close(self):
        if self.process.poll() is None:
            try:
                self.process.stdin.close()
                self.process.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.process.kill()
                self.process.wait()


class _Unbound(Exception):
    pass


def _resolve(value, bindings):
    if isinstance(value, str):
        match = _REFERENCE.match(value)
        if match is None:
            return value
        if match.group(1) not in bindings:
            raise _Unbound(match.group(1))
        return bindings[match.group(1)]
    if isinstance(value, dict):
        return dict((k, _resolve(v, bindings)) for k, v in value.items())
    if isinstance(value, list):
        return [_resolve(v, bindings) for v in value]
    return value


def _permitted(tool, iteration):
    if tool['group'] == QUERY:
        return True
    if tool['group'] not in iteration.tool_groups:
        return False
    if tool['group'] == ENTITY_CREATION and iteration.entity_scope:
        return tool['binding'] in iteration.entity_scope
    return True


def _check_trace(plan, trace, tools):
    groups = set()
    for iteration in plan.iterations:
        groups |= set(iteration.tool_groups)
    for n, step in enumerate(trace.steps, 1):
        if plan.iteration(step.iteration_id) is None:
            raise TraceError('step %d refers to iteration %d, which the plan lacks' % (n, step.iteration_id))
        tool = tools.get(step.tool)
        if tool is None:
            raise TraceError('step %d calls unknown tool %r' % (n, step.tool))
        if tool['group'] != QUERY and tool['group'] not in groups:
            raise TraceError('step %d: tool %r belongs to no group of any iteration' % (n, step.tool))


def run_plan(plan, trace, repair, endpoint, retry_budget=None):
    if retry_budget is None:
        retry_budget = app_settings.RETRY_BUDGET
    tools = {}
    for entry in endpoint.request('tools/list')['tools']:
        meta = entry.get('_meta', {})
        tools[entry['name']] = dict(entry, group=meta.get('group'), binding=meta.get('binding'))
    repair.check_against(tools)
    _check_trace(plan, trace, tools)

    report = RunReport(per_iteration=dict((i.id, IterationStats()) for i in plan.iterations))
    bindings = {}
    current_iteration = None
    for step in trace.steps:
        iteration = plan.iteration(step.iteration_id)
        if iteration.id != current_iteration:
            current_iteration = iteration.id
            logger.info('iteration %d: %s', iteration.id, iteration.goal)
        tool = tools[step.tool]
        if not _permitted(tool, iteration):
            logger.warning('iteration %d does not permit %s (group %s); call skipped',
                           iteration.id, step.tool, tool['group'])
            report.count(iteration.id, 'policy_violations')
            report.steps.append(StepRecord(iteration_id=iteration.id, tool=step.tool, status=SKIPPED_POLICY))
            continue
        try:
            args = _resolve(step.args, bindings)
        except _Unbound as e:
            logger.warning('step %s refers to $%s, which no successful step bound; skipped', step.tool, e)
            report.count(iteration.id, 'steps_skipped')
            report.steps.append(StepRecord(iteration_id=iteration.id, tool=step.tool, status=SKIPPED_UNBOUND))
            continue

        report.count(iteration.id, 'calls_total')
        attempt = 0
        while True:
            attempt += 1
            is_error, outcome = endpoint.call_tool(step.tool, args)
            if not is_error:
                if attempt == 1:
                    report.count(iteration.id, 'calls_ok')
                    status = OK
                else:
                    report.count(iteration.id, 'repairs_succeeded')
                    status = REPAIRED
                if step.bind and outcome.get('instance_iri'):
                    bindings[step.bind] = outcome['instance_iri']
                break
            report.count(iteration.id, 'violations')
            amended = apply_repair(outcome, args, repair) if attempt < retry_budget else None
            if amended is None:
                report.count(iteration.id, 'violations_unrepaired')
                status = UNREPAIRED
                break
            logger.debug('repairing %s field %s: %r -> %r', step.tool, outcome.get('field'),
                         args[outcome['field']], amended[outcome['field']])
            report.count(iteration.id, 'repairs_attempted')
            args = amended
        report.steps.append(StepRecord(iteration_id=iteration.id, tool=step.tool, status=status, attempts=attempt))

    result = endpoint.request('session/finalize')
    if result['isError']:
        report.final_status = 'incomplete'
        report.final_reports = json.loads(result['content'][0]['text'])
    else:
        report.final_status = 'done'
    logger.info('run finished: %s, %d/%d calls ok', report.final_status,
                report.calls_ok + report.repairs_succeeded, report.calls_total)
    return report


def local_endpoint(tbox, doc_id, workdir=None, feedback_enabled=True):
    endpoint = LocalEndpoint(ServerState.from_tbox(tbox, doc_id, workdir=workdir, feedback_enabled=feedback_enabled))
    endpoint.initialize()
    return endpoint
