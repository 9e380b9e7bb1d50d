import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "seeded",
    max_examples=1000,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.register_profile("quick", parent=settings.get_profile("seeded"), max_examples=100)
settings.load_profile(os.environ.get("MONOLAB_HYPOTHESIS_PROFILE", "seeded"))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
