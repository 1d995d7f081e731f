from .diagnostics import Diagnostic, ParseError
from .parser import (
    ProtocolFile,
    parse_computation,
    parse_global_type,
    parse_local_type,
    parse_program,
    parse_program_file,
    parse_protocol,
)
from .printer import (
    computation_str,
    global_str,
    local_str,
    program_str,
    protocol_file_str,
    protocol_str,
    to_text,
)

__all__ = [
    "Diagnostic", "ParseError", "ProtocolFile",
    "parse_computation", "parse_global_type", "parse_local_type", "parse_program",
    "parse_program_file", "parse_protocol",
    "computation_str", "global_str", "local_str", "program_str", "protocol_file_str",
    "protocol_str", "to_text",
]
