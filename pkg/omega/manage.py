"""Manages matrix files and run reports."""

import json
import logging
import os
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from omega.errors import AsymmetricMatrix, DimensionMismatch, InvalidParameters, IoError
from omega.space import SymmetricOperator

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
LIST_SEPARATOR = ";"


def check_file_exists(filename: str) -> None:
    """
    Check that a file with the given name exists.

    Parameters
    ----------
    filename : str
        The name of the file to check for existence.

    Raises
    ------
    IoError
        If the specified file does not exist.

    """
    if not os.path.isfile(filename):
        raise IoError(f"File '{filename}' does not exist. Please provide a valid file name.")
    logger.debug(f"   > File '{filename}' exists.")


def read_matrix(filename: str) -> SymmetricOperator:
    """
    Read a Hamiltonian from disk.

    ``.json`` files hold ``{"dim": n, "entries": [[...], ...]}``; any other
    extension is read as a whitespace-separated square matrix.
    Asymmetry up to 1e-12 is symmetrized away.

    Parameters
    ----------
    filename : str
        Path to the matrix file.

    Returns
    -------
    SymmetricOperator

    Raises
    ------
    IoError
        If the file is missing, unreadable or malformed.

    """
    check_file_exists(filename)
    try:
        if filename.lower().endswith(".json"):
            with open(filename, "r") as matrix_file:
                data = json.load(matrix_file)
            entries = np.asarray(data["entries"], dtype=float)
            if "dim" in data and entries.shape != (int(data["dim"]), int(data["dim"])):
                raise IoError(f"'{filename}' declares dim {data['dim']} but holds a {entries.shape} matrix.")
        else:
            entries = np.loadtxt(filename, dtype=float, ndmin=2)
    except IoError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as err:
        raise IoError(f"Could not read a matrix from '{filename}': {err}") from err

    try:
        H = SymmetricOperator.from_entries(entries)
    except (AsymmetricMatrix, DimensionMismatch, InvalidParameters) as err:
        raise IoError(f"'{filename}' does not hold a valid Hamiltonian: {err}") from err
    logger.info(f"> Read a {H.dim}x{H.dim} Hamiltonian from {filename}.")
    return H


def write_matrix(H: SymmetricOperator, filename: str) -> None:
    """Write a Hamiltonian as ``{"dim", "entries"}`` JSON."""
    payload = {"dim": H.dim, "entries": H.entries.tolist()}
    with open(filename, "w") as matrix_file:
        matrix_file.write(format_json(payload))
        matrix_file.write("\n")


def _json_value(value: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + f"\n{end}}}"
    if isinstance(value, (list, tuple, np.ndarray)):
        values = list(value)
        if not values:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in values):
            return "[" + ", ".join(_json_value(v, indent, level + 1) for v in values) + "]"
        items = [f"{pad}{_json_value(v, indent, level + 1)}" for v in values]
        return "[\n" + ",\n".join(items) + f"\n{end}]"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if not np.isfinite(number):
            return "null"
        return FLOAT_FORMAT % number
    if value is None:
        return "null"
    return json.dumps(str(value))


def format_json(report: Dict[str, Any], indent: int = 2) -> str:
    """Serialize a report as one JSON object with every float at 17 significant digits."""
    return _json_value(report, indent, 0)


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, (list, tuple, np.ndarray)):
            flat[name] = LIST_SEPARATOR.join(
                FLOAT_FORMAT % v if isinstance(v, (float, np.floating)) else str(v) for v in value
            )
        else:
            flat[name] = value
    return flat


def report_table(report: Dict[str, Any]) -> pd.DataFrame:
    """
    Tabulate a report.

    Reports whose results hold a ``trials`` list become one row per trial,
    each row also carrying the flattened scenario; other reports become a
    single row.
    """
    results = report.get("results", {})
    trials: List[Dict[str, Any]] = results.get("trials", []) if isinstance(results, dict) else []
    base = {k: v for k, v in report.items() if k != "results"}
    summary = {k: v for k, v in results.items() if k != "trials"} if isinstance(results, dict) else {}
    flat_base = _flatten({**base, "results": summary})
    if not trials:
        return pd.DataFrame([flat_base])
    rows = [{**flat_base, **_flatten(trial, "trial.")} for trial in trials]
    return pd.DataFrame(rows)


def format_tsv(report: Dict[str, Any]) -> str:
    """Tab-separated table with one header row."""
    return report_table(report).to_csv(sep="\t", index=False, float_format=FLOAT_FORMAT)


def format_report(report: Dict[str, Any], fmt: str = "json") -> str:
    if fmt == "json":
        return format_json(report) + "\n"
    if fmt == "tsv":
        return format_tsv(report)
    raise InvalidParameters(f"Unknown report format '{fmt}'; use json or tsv.")


def write_report(report: Dict[str, Any], filename: str, fmt: str = "json") -> None:
    """
    Write a report to ``filename`` as JSON or TSV.

    Raises
    ------
    IoError
        If the file cannot be written.

    """
    text = format_report(report, fmt)
    try:
        with open(filename, "w") as report_file:
            report_file.write(text)
    except OSError as err:
        raise IoError(f"Could not write the report to '{filename}': {err}") from err
    logger.info(f"> Report written to {filename}.")
