"""CSV and JSON emitters for result tables.

Both formats carry the tool version and the config hash so a file can be
traced back to the run that produced it. Output is deterministic: no
timestamps, fixed 17-significant-digit formatting.
"""

import json
import math
from pathlib import Path
from typing import Any, TextIO

from scattering import __version__
from scattering.compare import ResultTable
from scattering.run_config import RunConfig

NUMBER_FORMAT = "{:.17g}"


def _convert_angles(table: ResultTable, degrees: bool) -> list[list[float]]:
    if not degrees:
        return table.rows
    convert = [name in table.angle_columns for name in table.columns]
    return [[math.degrees(v) if flag else v for v, flag in zip(row, convert)] for row in table.rows]


def header_lines(config: RunConfig, command: str, degrees: bool = False) -> list[str]:
    """The ``#``-prefixed provenance header shared by both formats."""
    return [
        f"# phaseshift {__version__}",
        f"# command={command}",
        f"# config_hash={config.config_hash()}",
        f"# angles={'degrees' if degrees else 'radians'}",
    ]


def format_csv(table: ResultTable, config: RunConfig, command: str, degrees: bool = False) -> str:
    """Render the table as CSV text with a provenance header."""
    lines = header_lines(config, command, degrees)
    lines.extend(f"# {note}" for note in table.notes)
    lines.append(",".join(table.columns))
    for row in _convert_angles(table, degrees):
        lines.append(",".join(NUMBER_FORMAT.format(value) for value in row))
    return "\n".join(lines) + "\n"


def _json_number(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _clean(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "tolist"):
        return _clean(value.tolist())
    if isinstance(value, float):
        return _json_number(value)
    return value


def format_json(table: ResultTable, config: RunConfig, command: str, degrees: bool = False) -> str:
    """Render the table as JSON: metadata, columns, rows (NaN as null), diagnostics."""
    document = {
        "tool": "phaseshift",
        "version": __version__,
        "command": command,
        "config_hash": config.config_hash(),
        "config": config.model_dump(mode="json", by_alias=True),
        "angles": "degrees" if degrees else "radians",
        "columns": table.columns,
        "rows": [[_json_number(v) for v in row] for row in _convert_angles(table, degrees)],
        "notes": table.notes,
        "diagnostics": _clean(table.diagnostics),
    }
    return json.dumps(document, indent=2, sort_keys=False, allow_nan=False, default=str) + "\n"


def write_table(
    table: ResultTable,
    config: RunConfig,
    command: str,
    stream: TextIO | None = None,
) -> str:
    """Format per ``output.format`` and write to ``output.path`` or ``stream``.

    Returns:
        The rendered text.
    """
    degrees = config.output.degrees
    if config.output.format == "json":
        text = format_json(table, config, command, degrees)
    else:
        text = format_csv(table, config, command, degrees)
    if config.output.path:
        Path(config.output.path).write_text(text, encoding="utf-8")
    elif stream is not None:
        stream.write(text)
    return text
