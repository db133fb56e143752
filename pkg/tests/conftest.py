import pytest

# (criterion, passed, detail) recorded by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number, passed, detail):
        ACCEPTANCE[number] = (passed, detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section('acceptance criteria')
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        verdict = 'PASS' if passed else 'FAIL'
        terminalreporter.write_line(f'criterion {number:2d}: {verdict}  '
                                    f'{detail}')
