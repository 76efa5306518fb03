import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "crul",
    max_examples=int(os.environ.get("CRUL_HYPOTHESIS_EXAMPLES", "50")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("crul")
