import pytest

from multirank.core import AnswerSet, CandidateSet, Passage, Question


_acceptance: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if hasattr(report, "wasxfail"):
        # an expected failure is still a failed criterion
        _acceptance.append((name, "xfail"))
    elif report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        label = {"passed": "PASS", "xfail": "FAIL (expected, see README)"}.get(outcome, "FAIL")
        terminalreporter.write_line(f"{label}  {name}")


@pytest.fixture
def corpus():
    return [
        Passage("p1", "Roseanne", "Roseanne is an American sitcom starring Roseanne Barr."),
        Passage("p2", "Darlene", "Darlene Conner was played by Sara Gilbert in the sitcom."),
        Passage("p3", "Mark", "The character was cast as Mark Conner-Healy by Ames McNamara in 2018."),
        Passage("p4", "Weather", "Long Island weather is mild in spring."),
    ]


@pytest.fixture
def fixture_questions():
    return [
        Question("q1", "who played darlene in roseanne", AnswerSet((("Sara Gilbert",),))),
        Question("q2", "who played mark in roseanne", AnswerSet((("Ames McNamara", "McNamara"), ("Glenn Quinn",)))),
        Question("q3", "what is roseanne", AnswerSet((("sitcom", "situation comedy"),))),
    ]


def make_candidates(texts, seed=None, scores=()):
    """Candidate set whose index i holds texts[i-1] when seed is None."""
    passages = tuple(Passage(f"c{i}", "", t) for i, t in enumerate(texts, start=1))
    return CandidateSet("q", passages, scores, seed)
