import django.dispatch

# session is the runtime Session handling the call, tool the tool name and
# arguments the (resolved) argument map; outcome is the ToolResult or
# ViolationReport returned to the caller
pre_invoke = django.dispatch.Signal()
post_invoke = django.dispatch.Signal()

# sent after the store of a session was written to path
store_flushed = django.dispatch.Signal()
