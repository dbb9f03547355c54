"""Declarative op framework: typed named operations matched at run time.

Ops are described by YAML descriptors (name, kind, typed parameters, source
URI) and bound to plain callables through a binding table, so existing code
becomes an op without modification. Requests are resolved by name and type
through four routines (direct, adapted, converted, both) and executed
through a fluent builder.
"""

from .errors import (
    DependencyCycleError,
    DimensionMismatchError,
    ExecutionError,
    NoMatchError,
    OpsError,
    PreconditionError,
    RegistrationError,
    SchemaError,
    TypeSyntaxError,
)
from .matcher import (
    InfoTree,
    MatchCache,
    OpRequest,
    RoutineTag,
    computer_request,
    function_request,
    inplace_request,
)
from .registry import (
    Io,
    Kind,
    OpEnvironment,
    OpInfo,
    ParamSpec,
    build_environment,
    parse_descriptors,
)
from .runtime import ComputePool, ProgressReport, report_progress
from .types import (
    DescriptorTable,
    SemanticType,
    TypeHierarchy,
    describe_type,
    is_assignable,
    parse_type,
)
from .values import (
    BOOLEAN,
    BYTE_ARRAY,
    IMAGE_F64,
    IMAGE_U8,
    INTEGER,
    REAL,
    REAL_ARRAY,
    TEXT,
    Value,
    image_f64,
    image_u8,
    wrap,
)

__version__ = "0.1.0"

__all__ = [
    "BOOLEAN",
    "BYTE_ARRAY",
    "ComputePool",
    "DependencyCycleError",
    "DescriptorTable",
    "DimensionMismatchError",
    "ExecutionError",
    "IMAGE_F64",
    "IMAGE_U8",
    "INTEGER",
    "InfoTree",
    "Io",
    "Kind",
    "MatchCache",
    "NoMatchError",
    "OpEnvironment",
    "OpInfo",
    "OpRequest",
    "OpsError",
    "ParamSpec",
    "PreconditionError",
    "ProgressReport",
    "REAL",
    "REAL_ARRAY",
    "RegistrationError",
    "RoutineTag",
    "SchemaError",
    "SemanticType",
    "TEXT",
    "TypeHierarchy",
    "TypeSyntaxError",
    "Value",
    "build_environment",
    "computer_request",
    "describe_type",
    "function_request",
    "image_f64",
    "image_u8",
    "inplace_request",
    "is_assignable",
    "parse_descriptors",
    "parse_type",
    "report_progress",
    "wrap",
]
