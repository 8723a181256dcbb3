from hypothesis import settings

# property tests run derandomized so CI results are reproducible
settings.register_profile("ci", derandomize=True, deadline=None)
settings.load_profile("ci")
