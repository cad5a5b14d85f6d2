# -*- coding: utf-8 -*-
import io
import sys

from ...endpoint import ServerState, serve
from ..base import OntoforgeCommand


class Command(OntoforgeCommand):
    help = 'Serve the compiled tools of a T-Box over newline-delimited JSON-RPC on stdio.'

    def add_arguments(self, parser):
        parser.add_argument('--tbox', required=True)
        parser.add_argument('--doc-id', required=True, help='document identifier, e.g. a DOI with dots')
        parser.add_argument('--workdir', required=True, help='directory holding <doc-id>.ttl and <doc-id>.jsonl')
        parser.add_argument('--no-feedback', action='store_true',
                            help='ablation mode: only datatype violations are reported')
        parser.add_argument('--extends', dest='main_tbox', help='main T-Box the --tbox extension links into')
        parser.add_argument('--main-abox', help='main A-Box whose instances cross-document links may target')

    def run(self, tbox, doc_id, workdir, no_feedback, main_tbox=None, main_abox=None, **options):
        state = ServerState.from_tbox(tbox, doc_id, workdir=workdir, feedback_enabled=not no_feedback,
                                      main_tbox=main_tbox, main_abox=main_abox)
        stdin = io.TextIOWrapper(sys.stdin.buffer, encoding='utf-8', errors='replace')
        # the wire goes to the real stdout, unwrapped by OutputWrapper
        serve(state, stdin, sys.stdout)
