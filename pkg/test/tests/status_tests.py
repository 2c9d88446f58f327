import datetime

from gcntune.status_file import StatusFile, STATES
from gcntune.unittest import GcnTuneTestCase


class StatusTests(GcnTuneTestCase):

    def test_status(self):
        """Checking status object basic functionality."""

        path = self.tmp_path/'status'

        status = StatusFile(path)

        self.assertTrue(path.exists())
        status_info = status.current()
        self.assertEqual(status_info.state, 'CREATED')

        now = datetime.datetime.now()
        self.assertLessEqual(status_info.when, now)
        self.assertGreater(now + datetime.timedelta(seconds=5),
                           status_info.when)
        self.assertEqual(status_info.note, 'Created status file.')

        states = [STATES.LOADING, STATES.TRAINING, STATES.REPORTING,
                  STATES.COMPLETE]
        for state in states:
            status.set(state, '{}_{}'.format(state, state.lower()))

        self.assertEqual(len(status.history()), 5)
        self.assertEqual(status.current().state, 'COMPLETE')
        self.assertEqual([info.state for info in status.history()],
                         ['CREATED'] + states)
        self.assertTrue(status.has_state(STATES.TRAINING))
        self.assertFalse(status.has_state(STATES.RUN_ERROR))

        # Multi-line notes survive the round trip.
        status.set(STATES.RUN_ERROR, "line one\nline two")
        self.assertEqual(status.current().note, "line one\nline two")

        # Make sure too long statuses are handled correctly.
        status.set("AN_EXCESSIVELY_LONG_STATE_NAME",
                   "This is " + "way "*10000 + "too long.")
        status_info = status.current()

        self.assertLessEqual(len(status_info.state), STATES.max_length)
        self.assertEqual(status_info.state, STATES.INVALID)
        self.assertLessEqual(len(status_info.note), status.NOTE_MAX)
        self.assertTrue(status_info.note.startswith(
            '(AN_EXCESSIVELY_LONG_STATE_NAME)'))

        with path.open('r') as status_file:
            lines = status_file.readlines()
        self.assertLessEqual(len(lines[-1]), status.LINE_MAX)

        # Reopening an existing file doesn't add a CREATED line.
        self.assertEqual(StatusFile(path).current().state, STATES.INVALID)
        self.assertEqual(StatusFile(path), status)

    def test_damaged_status(self):
        """Damaged lines and empty files don't crash status reads."""

        path = self.tmp_path/'status'
        status = StatusFile(path)

        with path.open('a') as status_file:
            status_file.write('garbage\n')
        with self.assertLogs('gcntune.status_file', 'WARNING'):
            info = status.current()
        self.assertEqual(info.state, '')

        path.write_text('')
        self.assertEqual(status.current().state, STATES.INVALID)

    def test_states(self):
        """Every state has help text and fits the format rules."""

        for state in STATES.list():
            self.assertTrue(STATES.validate(state))
            self.assertNotIn('Help missing', STATES.help(state))
        self.assertEqual(STATES.TRAINING, 'TRAINING')
        self.assertFalse(STATES.validate('not_a_state'))
