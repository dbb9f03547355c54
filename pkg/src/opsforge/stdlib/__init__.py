"""Standard library: builtin op bodies, their descriptors, and defaults.

BINDINGS is the complete source-URI to callable table for the builtin and
legacy descriptor files. default_environment wires descriptors, bindings,
the type hierarchy (both image types under Image), and human-readable type
labels into a ready OpEnvironment.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Callable, Mapping

from ..registry import OpEnvironment, build_environment
from ..types import DescriptorTable, TypeHierarchy, parse_type
from . import adapt, bodies, legacy

BINDINGS: dict[str, Callable] = {
    "builtin:math/add_ints": bodies.add_ints,
    "builtin:math/sub_ints": bodies.sub_ints,
    "builtin:math/mul_ints": bodies.mul_ints,
    "builtin:math/add_reals": bodies.add_reals,
    "builtin:math/sub_reals": bodies.sub_reals,
    "builtin:math/mul_reals": bodies.mul_reals,
    # compiled computers return content, so the element computer forms
    # share the scalar function bodies
    "builtin:math/add_reals_computer": bodies.add_reals,
    "builtin:math/sub_reals_computer": bodies.sub_reals,
    "builtin:math/mul_reals_computer": bodies.mul_reals,
    "builtin:math/div_reals": bodies.div_reals,
    "builtin:create/bytearray": bodies.create_bytearray,
    "builtin:create/realarray": bodies.create_array,
    "builtin:create/imageu8": bodies.create_array,
    "builtin:create/imagef64": bodies.create_array,
    "builtin:copy/bytearray": bodies.copy_content,
    "builtin:copy/realarray": bodies.copy_content,
    "builtin:copy/imageu8": bodies.copy_content,
    "builtin:copy/imagef64": bodies.copy_content,
    "builtin:copy/real": bodies.copy_content,
    "builtin:convert/int_to_real": bodies.int_to_real,
    "builtin:convert/real_to_int": bodies.real_to_int,
    "builtin:convert/u8_to_f64": bodies.u8_to_f64,
    "builtin:convert/f64_to_u8": bodies.f64_to_u8,
    "builtin:convert/bytes_to_reals": bodies.bytes_to_reals,
    "builtin:convert/reals_to_bytes": bodies.reals_to_bytes,
    "builtin:describe/integer": bodies.describe_integer,
    "builtin:describe/real": bodies.describe_real,
    "builtin:describe/boolean": bodies.describe_boolean,
    "builtin:describe/text": bodies.describe_text,
    "builtin:describe/bytearray": bodies.describe_array,
    "builtin:describe/realarray": bodies.describe_array,
    "builtin:describe/imageu8": bodies.describe_image,
    "builtin:describe/imagef64": bodies.describe_image,
    "builtin:adapt/computer1_to_function1": adapt.computer_to_function,
    "builtin:adapt/computer2_to_function2": adapt.computer_to_function,
    "builtin:adapt/computer3_to_function3": adapt.computer_to_function,
    "builtin:adapt/function1_to_computer1": adapt.function_to_computer,
    "builtin:adapt/function2_to_computer2": adapt.function_to_computer,
    "builtin:adapt/function3_to_computer3": adapt.function_to_computer,
    "builtin:adapt/inplace1_to_function1": adapt.inplace_to_function,
    "builtin:adapt/inplace1_to_computer1": adapt.inplace_to_computer,
    "builtin:adapt/lift2_real_to_imagef64": adapt.lift2_elementwise,
    "builtin:adapt/lift2_real_to_imagef64_fn": adapt.lift2_elementwise,
    "builtin:filter/gauss": bodies.gaussian_blur,
    "builtin:filter/dog": bodies.difference_of_gaussians,
    "builtin:filter/fft_stub": bodies.fft_stub,
    "builtin:transform/rescale2d": bodies.rescale2d,
    "builtin:benchmark/increment_u8": bodies.increment_u8,
    "legacy:stats/sum": legacy.array_sum,
    "legacy:transform/reverse": legacy.reversed_copy,
    "legacy:transform/transpose": legacy.transpose,
}


def builtin_descriptors_path() -> Path:
    return Path(__file__).parent / "builtin-ops.yaml"


def legacy_descriptors_path() -> Path:
    return Path(__file__).parent / "legacy-ops.yaml"


def default_hierarchy() -> TypeHierarchy:
    image = parse_type("Image")
    return TypeHierarchy(
        [
            (parse_type("ImageU8"), image),
            (parse_type("ImageF64"), image),
        ]
    )


def default_describe_table() -> DescriptorTable:
    return DescriptorTable(
        {
            "Integer": "integer",
            "Real": "number",
            "Boolean": "boolean",
            "Text": "text",
            "ByteArray": "array",
            "RealArray": "array",
            "Image": "image",
            "ImageU8": "image",
            "ImageF64": "image",
        }
    )


def resolve_descriptor_paths(
    flag: str | None, environ: Mapping[str, str] | None = None
) -> list[Path]:
    """Descriptor files to load: builtins always, then extras.

    Extras come from the --descriptors flag (comma separated) when given,
    else from OPSFORGE_PATH (os.pathsep separated), else the bundled legacy
    descriptors.
    """
    if environ is None:
        environ = os.environ
    paths = [builtin_descriptors_path()]
    if flag:
        paths.extend(Path(p) for p in flag.split(",") if p)
    elif environ.get("OPSFORGE_PATH"):
        paths.extend(
            Path(p) for p in environ["OPSFORGE_PATH"].split(os.pathsep) if p
        )
    else:
        paths.append(legacy_descriptors_path())
    return paths


def default_environment(
    *,
    cache_enabled: bool = True,
    pool=None,
    include_legacy: bool = True,
    extra_paths=(),
    extra_bindings: Mapping[str, Callable] | None = None,
) -> OpEnvironment:
    paths = [builtin_descriptors_path()]
    if include_legacy:
        paths.append(legacy_descriptors_path())
    paths.extend(Path(p) for p in extra_paths)
    bindings = dict(BINDINGS)
    if extra_bindings:
        bindings.update(extra_bindings)
    return build_environment(
        paths,
        bindings,
        hierarchy=default_hierarchy(),
        describe_table=default_describe_table(),
        cache_enabled=cache_enabled,
        pool=pool,
    )
