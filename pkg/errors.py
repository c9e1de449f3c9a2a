"""
Exception hierarchy for modattach.

Every error carries a stable ``code`` so the CLI can print
``error: <code>: <detail>`` lines that scripts can parse.
"""
from typing import List, Optional


class ModAttachError(Exception):
    """Base class for all modattach errors."""

    code = "error"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# Catalog errors
class CatalogError(ModAttachError):
    code = "catalog"


class MalformedRecord(CatalogError):
    code = "malformed_record"

    def __init__(self, detail: str, line_no: Optional[int] = None):
        if line_no is not None:
            detail = f"line {line_no}: {detail}"
        super().__init__(detail)
        self.line_no = line_no


class UnknownDependency(CatalogError):
    code = "unknown_dependency"

    def __init__(self, module: str, dependency: str):
        super().__init__(f"module '{module}' depends on missing module '{dependency}'")
        self.module = module
        self.dependency = dependency


class CircularDependency(CatalogError):
    code = "circular_dependency"

    def __init__(self, cycle: List[str]):
        super().__init__("cycle " + " -> ".join(cycle + cycle[:1]))
        self.cycle = cycle


class DuplicateModule(CatalogError):
    code = "duplicate_module"

    def __init__(self, name: str):
        super().__init__(f"module '{name}' is listed more than once")
        self.name = name


# Hardware errors
class MalformedInventory(ModAttachError):
    code = "malformed_inventory"


# Registry errors
class UnknownSelection(ModAttachError):
    code = "unknown_selection"

    def __init__(self, names: List[str]):
        super().__init__("selected modules not in catalog: " + ", ".join(names))
        self.names = names


class DepthOverflow(ModAttachError):
    code = "depth_overflow"

    def __init__(self, module: str, level: int):
        super().__init__(f"module '{module}' needs level {level}, index bytes stop at 255")
        self.module = module
        self.level = level


class IndexFormatError(ModAttachError):
    code = "index"


class VersionMismatch(IndexFormatError):
    code = "version_mismatch"


class PositionMismatch(IndexFormatError):
    code = "position_mismatch"


class ValueOutOfRange(IndexFormatError):
    code = "value_out_of_range"


# Loader errors
class IndexMismatch(ModAttachError):
    code = "index_mismatch"


class ConfigError(ModAttachError):
    code = "config"


class MalformedTrace(ModAttachError):
    code = "malformed_trace"
