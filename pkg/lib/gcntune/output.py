"""
Helper functions for printing and general output: colored terminal
messages, JSON that understands numpy and paths, CSV files and text tables.

The standard 3/4 bit colors are available through the COLORS dictionary,
or directly as attributes of this module.

..code:: python
output.COLORS['RED']
output.RED
"""

import csv
import datetime
import json
import pprint
import shutil
import sys
import textwrap
from collections import UserDict
from pathlib import Path
from typing import Dict, List

import numpy as np

BLACK = 30
RED = 31
GREEN = 32
YELLOW = 33
BLUE = 34
MAGENTA = 35
CYAN = 36
WHITE = 37
GREY = 37
BOLD = 1
FAINT = 2
UNDERLINE = 4

#: Available colors.
COLORS = {
    'BLACK': BLACK,
    'RED': RED,
    'GREEN': GREEN,
    'YELLOW': YELLOW,
    'BLUE': BLUE,
    'MAGENTA': MAGENTA,
    'CYAN': CYAN,
    'WHITE': WHITE,
    'GREY': GREY,
    'BOLD': BOLD,
    'FAINT': FAINT,
    'UNDERLINE': UNDERLINE,
}


def dbg_print(*args, color=YELLOW, file=sys.stderr, end="", pformat=True,
              **kwargs):
    """A colored print statement for debug printing. Use when you want to
print dbg statements and easily excise it later.

:param file: The file object to write to.
:param end: Line ending, empty by default.
:param color: ANSI color code to print the string under.
:param bool pformat: Automatically apply pprint.pformat to args that are
    dicts or lists.
"""

    start_escape = '\x1b[{}m'.format(color)

    print(start_escape, end='', file=file)

    if pformat:
        args = list(args)
        for i in range(len(args)):
            if isinstance(args[i], (dict, list)):
                args[i] = pprint.pformat(args[i])

    print(*args, file=file, end='', **kwargs)
    print('\x1b[0m', end=end, file=file)
    sys.stderr.flush()


def clear_line(outfile):
    """Clear the last line written to output. Assumes the line ended with
    a '\\r' rather than a newline."""

    print('\x1b[2K', end='', file=outfile)


def fprint(*args, color=None, bullet='', width=0, wrap_indent=0,
           sep=' ', file=sys.stdout, end='\n', flush=False, clear=False):
    """Print with automatic wrapping, bullets, and other features. Also
    accepts all print() kwargs.

    :param args: Standard print function args
    :param int color: ANSI color code to print the string under.
    :param str bullet: Start the first line with this string, and the
        following lines indented to match.
    :param int wrap_indent: Indent wrapped lines this many spaces.
    :param Union[int,None] width: Wrap the text to this width. If 0, find the
        terminal's width and wrap to that. None disables wrapping.
    :param str sep: The standard print sep argument.
    :param file: Stream to print.
    :param str end: String appended after the last value (default \\n)
    :param bool flush: Whether to forcibly flush the stream.
    :param bool clear: Perform a 'clear_line' before printing.
    """

    if clear:
        clear_line(file)

    args = [str(a) for a in args]
    if color is not None:
        print('\x1b[{}m'.format(color), end='', file=file)

    if width == 0:
        width = shutil.get_terminal_size().columns

    out_str = sep.join(args)
    if width is not None:
        wrap_indent = ' '*wrap_indent
        paragraphs = []
        for paragraph in str.splitlines(out_str):
            lines = '\n'.join(textwrap.wrap(paragraph, width=width,
                                            subsequent_indent=wrap_indent))
            if bullet:
                lines = textwrap.indent(lines, bullet, lines.startswith)
            paragraphs.append(lines)
        out_str = '\n'.join(paragraphs)

    print(out_str, file=file, end='')

    if color is not None:
        print('\x1b[0m', file=file, end='')

    print(end, end='', file=file, flush=flush)


class GcnTuneEncoder(json.JSONEncoder):
    """Encode paths, datetimes and numpy values alongside the builtin
    types."""

    def default(self, o):  # pylint: disable=E0202

        if isinstance(o, Path):
            return str(o)
        elif isinstance(o, datetime.datetime):
            return o.isoformat()
        elif isinstance(o, np.integer):
            return int(o)
        elif isinstance(o, np.floating):
            return float(o)
        elif isinstance(o, np.bool_):
            return bool(o)
        elif isinstance(o, np.ndarray):
            return o.tolist()
        elif isinstance(o, (dict, UserDict)):
            return dict(o)

        return super().default(o)


def json_dumps(obj, **kwargs) -> str:
    """Dump data to string as per the json dumps function, but using
our custom encoder."""

    return json.dumps(obj, cls=GcnTuneEncoder, **kwargs)


def json_dump(obj, file, **kwargs):
    """Dump data to a file as per the json dump function, but using
our custom encoder."""

    return json.dump(obj, file, cls=GcnTuneEncoder, **kwargs)


def _csv_value(value):
    if value is None:
        return ''
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def output_csv(outfile, fields, rows, field_info=None, header=True):
    """Write the given rows out as a CSV, comma separated with LF line
    endings. Missing and None values become empty cells.

    :param outfile: The file object to write to. Open it with newline=''
        so the writer controls line endings.
    :param fields: A list of fields to write, and in what order.
    :param rows: A list of dictionaries to write, in the given order.
    :param field_info: A dict of information on each field. See 'draw_table'
        below. Only the title is used.
    :param bool header: Write a header row first.
    """

    if field_info is None:
        field_info = {}

    row_data = []
    if header:
        row_data.append([field_info.get(field, {}).get('title', field)
                         for field in fields])

    for row in rows:
        row_data.append([_csv_value(row.get(field)) for field in fields])

    try:
        writer = csv.writer(outfile, lineterminator='\n')
        writer.writerows(row_data)
    except IOError:
        # Broken pipes are fine.
        pass


def write_csv(path: Path, fields, rows, field_info=None):
    """Write rows to a UTF-8 CSV file at path."""

    with Path(path).open('w', encoding='utf-8', newline='') as csv_file:
        output_csv(csv_file, fields, rows, field_info=field_info)


DEFAULT_BORDER_CHARS = {
    'vsep': '|',
    'hsep': '-',
    'isep': '+',
}


def dt_field_titles(fields: List[str], field_info: dict) -> Dict[str, str]:
    """Get the titles for each column in the table."""

    titles = {}
    for field in fields:
        default_title = field.replace('_', ' ').capitalize()
        titles[field] = str(field_info.get(field, {})
                            .get('title', default_title))
    return titles


def dt_format_rows(rows, fields, field_info) -> List[Dict[str, str]]:
    """Apply each field's transform, format and default to every row."""

    formatted = []
    for row in rows:
        out_row = {}
        for field in fields:
            info = field_info.get(field, {})
            value = row.get(field)
            if value is None or value == '':
                out_row[field] = str(info.get('default', ''))
                continue
            if 'transform' in info:
                value = info['transform'](value)
            out_row[field] = info.get('format', '{0}').format(value)
        formatted.append(out_row)
    return formatted


def dt_format_row(row, fields, widths, pad, border, vsep) -> str:
    """Format a single table row, left justifying each cell."""

    padding = ' ' if pad else ''
    cells = [padding + row[field].ljust(widths[field]) + padding
             for field in fields]
    line = vsep.join(cells)
    if border:
        line = vsep + line + vsep
    else:
        line = line.rstrip()
    return line + '\n'


def draw_table(outfile, fields, rows, field_info=None, border=False,
               pad=True, border_chars=None, header=True, title=None):
    """Print a table from the given data, sizing each column to its widest
entry.

:param outfile: The file-like object to write to.
:param list fields: The fields to include, in the given order. These
    also serve as the default column titles (Capitalized).
:param list(dict) rows: A list of data dictionaries.
:param dict field_info: Per field (all optional):

  - title - The column header for this field.
  - transform - a function applied to the value before formatting.
  - format - a new style format string, given the value as arg 0.
    IE: '{0:.1f}'.
  - default - Printed for missing or None values. Blank by default.
:param bool border: Put a border around the table.
:param bool pad: Put a space on either side of each entry.
:param dict border_chars: Keys 'vsep', 'hsep', 'isep'.
:param bool header: Print a header row and a separator.
:param str title: Add the given title above the table.
"""

    if field_info is None:
        field_info = {}

    border_chars = {} if border_chars is None else border_chars
    vsep = border_chars.get('vsep', DEFAULT_BORDER_CHARS['vsep'])
    hsep = border_chars.get('hsep', DEFAULT_BORDER_CHARS['hsep'])
    isep = border_chars.get('isep', DEFAULT_BORDER_CHARS['isep'])
    if len(vsep) != 1 or len(hsep) != 1 or len(isep) != 1:
        raise RuntimeError("Separators must each be one character long.")

    titles = dt_field_titles(fields, field_info)
    rows = dt_format_rows(rows, fields, field_info)
    if header:
        rows.insert(0, titles)

    widths = {field: max(len(row[field]) for row in rows) if rows else 0
              for field in fields}

    brk_pad_extra = 2 if pad else 0
    horizontal_break = isep.join([hsep * (widths[field] + brk_pad_extra)
                                  for field in fields])
    if border:
        horizontal_break = isep + horizontal_break + isep
    horizontal_break += '\n'

    try:
        if border:
            outfile.write(horizontal_break)
        if title:
            outfile.write(title + '\n')
            outfile.write(horizontal_break)

        for row_i, row in enumerate(rows):
            outfile.write(dt_format_row(row, fields, widths, pad, border,
                                        vsep))
            if row_i == 0 and header:
                outfile.write(horizontal_break)

        if border:
            outfile.write(horizontal_break)
    except IOError:
        pass
