"""Every experiment run has a status file that tracks its progress through
loading, training and reporting.

Each state is one line of the file, ``<timestamp> <STATE> <note>``, capped
at 4096 bytes so that appends stay atomic. States describe where a run is in
its lifecycle, not how well it did; accuracies live in ``summary.json``.

Usage: ::

    status = StatusFile(run_dir/'status')
    status.set(STATES.TRAINING, "Epoch 0 of 400.")
    status.current().state
"""

import datetime
import logging
import os
from pathlib import Path
from typing import List


class RunStatusError(RuntimeError):
    """Error raised by any status file related problems."""


class RunStatesStruct:
    """The valid run state constants.

Rules:

- The constants are all caps ascii identifiers of at most 15 characters.
- Error states end in '_ERROR'.

States are written below as ``<state_name> = <help_text>``. On init the help
text is stored separately and each attribute is set to its own name, so
``STATES.TRAINING == 'TRAINING'``.
"""

    UNKNOWN = "We can't determine the status."
    INVALID = "The status given to set was invalid."
    CREATED = "The run directory was created."
    LOADING = "The dataset is being loaded and split."
    TRAINING = "The selected method is training models."
    REPORTING = "Run artifacts and the summary are being written."
    COMPLETE = "The run finished and its summary is final."
    RUN_ERROR = "The run stopped on an error. See the note for details."

    max_length = 15

    def __init__(self):

        self._help = {}

        for key in dir(self):
            if key.startswith('_') or key[0].islower():
                continue

            if not self.validate(key):
                raise RuntimeError("Invalid StatusFile constant '{}'."
                                   .format(key))

            self._help[key] = getattr(self, key)
            setattr(self, key, key)

    def validate(self, key: str) -> bool:
        """Make sure the key conforms to the above rules."""
        return (key[:1].isalpha() and
                key.isupper() and
                key.isidentifier() and
                len(key.encode('utf-8')) == len(key) and
                len(key) <= self.max_length and
                hasattr(self, key))

    def help(self, state: str) -> str:
        return self._help.get(state,
                              "Help missing for state '{}'".format(state))

    def list(self):
        return self._help.keys()


STATES = RunStatesStruct()


class StatusInfo:
    """A single status line.

:ivar str state: A state string (from STATES).
:ivar str note: The note for this status update.
:ivar datetime when: When this state was saved.
"""

    def __init__(self, state, note, when=None):

        self.state = state
        self.note = note.replace('\\n', '\n')
        self.when = datetime.datetime.now() if when is None else when

    def __str__(self):
        return 'Status: {s.when} {s.state} {s.note}'.format(s=self)

    def __repr__(self):
        return 'StatusInfo({s.when}, {s.state}, {s.note})'.format(s=self)

    def as_dict(self) -> dict:
        return {"state": self.state, "note": self.note, "time": self.when}


class StatusFile:
    """Wraps a run's status file. Writes are single appends no longer than
LINE_MAX, so concurrent writers never interleave within a line."""

    STATES = STATES

    TIME_FORMAT = '%Y-%m-%dT%H:%M:%S.%f'
    TS_LEN = 5 + 3 + 3 + 3 + 3 + 3 + 6

    LOGGER = logging.getLogger(__name__)

    LINE_MAX = 4096
    # Everything but the timestamp, the state, two spaces and the newline.
    NOTE_MAX = LINE_MAX - TS_LEN - 1 - STATES.max_length - 1 - 1

    def __init__(self, path: Path):

        self.path = Path(path)

        if not self.path.is_file():
            self.set(STATES.CREATED, 'Created status file.')

    def _parse_status_line(self, line: bytes) -> StatusInfo:
        """Parse a status line, tolerating damaged lines."""

        line = line.decode('utf-8')

        parts = line.split(" ", 2)
        state = ''
        note = ''
        when = None

        if parts:
            try:
                when = datetime.datetime.strptime(parts.pop(0),
                                                  self.TIME_FORMAT)
            except ValueError as err:
                self.LOGGER.warning(
                    "Bad date in status line '%s' in file '%s': %s",
                    line, self.path, err)

        if parts:
            state = parts.pop(0).strip()

        if parts:
            note = parts.pop(0).strip()

        return StatusInfo(state, note, when=when)

    def history(self) -> List[StatusInfo]:
        """Every status recorded, oldest first."""

        try:
            with self.path.open('rb') as status_file:
                lines = status_file.readlines()
        except OSError as err:
            raise RunStatusError("Error reading status file '{}': {}"
                                 .format(self.path, err))

        return [self._parse_status_line(line) for line in lines]

    def has_state(self, state: str) -> bool:
        return any(state == info.state for info in self.history())

    def current(self) -> StatusInfo:
        """Return the most recent status."""

        end_read_len = self.LINE_MAX + 16

        try:
            with self.path.open('rb') as status_file:
                status_file.seek(0, os.SEEK_END)
                file_len = status_file.tell()
                if file_len < end_read_len:
                    status_file.seek(0)
                else:
                    status_file.seek(-end_read_len, os.SEEK_END)

                lines = status_file.readlines()
        except OSError as err:
            raise RunStatusError("Error reading status file '{}': {}"
                                 .format(self.path, err))

        if not lines:
            return StatusInfo(state=STATES.INVALID,
                              note="Status file was empty.")

        return self._parse_status_line(lines[-1])

    def set(self, state: str, note: str) -> None:
        """Append a state. Unknown states are recorded as INVALID with the
        given state prefixed to the note."""

        when = datetime.datetime.now().strftime(self.TIME_FORMAT)

        if not STATES.validate(state):
            note = '({}) {}'.format(state, note)
            state = STATES.INVALID

        note = note.replace('\n', '\\n')
        note = note.encode('utf-8')[:self.NOTE_MAX].decode('utf-8', 'ignore')

        status_line = '{} {} {}\n'.format(when, state, note).encode('utf-8')
        try:
            with self.path.open('ab') as status_file:
                status_file.write(status_line)
        except OSError as err:
            raise RunStatusError("Could not write status line '{}' to status "
                                 "file '{}': {}"
                                 .format(status_line, self.path, err))

    def __eq__(self, other):
        return isinstance(other, type(self)) and self.path == other.path
