"""Run artifacts: deterministic CSV export and run-directory layout."""

import os


def format_cell(value) -> str:
    """Locale-free cell text; floats use repr for exact round-trips."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_csv(rows, columns, path) -> None:
    """Write header + rows with '.' decimals and '\\n' terminators."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(row[c]) for c in columns) + "\n")


def read_csv(path):
    """Parse an exported CSV back into dict rows (numbers become floats)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    columns = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        row = {}
        for col, cell in zip(columns, cells):
            try:
                row[col] = float(cell)
            except ValueError:
                row[col] = cell
        rows.append(row)
    return rows


class RunDirectory:
    """Output directory holding the resolved config snapshot and result files."""

    def __init__(self, path):
        self.path = path
        os.makedirs(path, exist_ok=True)

    def file(self, name: str) -> str:
        return os.path.join(self.path, name)

    def write_config(self, text: str) -> None:
        with open(self.file("config.ini"), "w", encoding="utf-8") as fh:
            fh.write(text)
