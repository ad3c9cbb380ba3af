import hypothesis

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=30, deadline=None)
hypothesis.settings.load_profile("ci")
