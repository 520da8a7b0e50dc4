# kherd/commands/__init__.py
# One blueprint per experiment command; registered by the app factory.
