import pytest

_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record a pass/fail line for an acceptance criterion.

    Usage: ``with criterion(3, "label") as note: ...``; ``note(text)`` adds
    detail to the printed line. The line is FAIL unless the block completes.
    """
    class _Recorder:
        def __call__(self, number, label):
            self.number, self.label, self.details = number, label, []
            return self

        def __enter__(self):
            return self.details.append

        def __exit__(self, exc_type, exc, tb):
            ok = exc_type is None
            _ACCEPTANCE[self.number] = (ok, self.label, "; ".join(self.details))
            line = _format(self.number, ok, self.label, "; ".join(self.details))
            print("\n" + line)
            return False

    return _Recorder()


def _format(number, ok, label, details):
    text = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {label}"
    return text + (f"  [{details}]" if details else "")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_format(number, *_ACCEPTANCE[number]))
