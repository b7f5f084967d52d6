import nox

nox.options.reuse_existing_virtualenvs = True


@nox.session(python=["3.9", "3.10", "3.11", "3.12"])
def test(session):
    """Run the tests."""
    session.install(".[test]")
    session.run("pytest", *session.posargs)


@nox.session(python="3.11")
def slow(session):
    """Run the statistical checks on full-size networks."""
    session.install(".[test]")
    session.run("pytest", "-m", "slow", *session.posargs)


@nox.session(python="3.11")
def coverage(session) -> None:
    """Report test coverage."""
    session.install(".[test]")
    session.run("pytest", "--cov=trilat_pso", "--cov-report=term-missing")


@nox.session(python="3.11")
def docs(session):
    """Build the documentation."""
    session.install(".[doc]")
    session.run("sphinx-build", "docs", "docs/_build")
