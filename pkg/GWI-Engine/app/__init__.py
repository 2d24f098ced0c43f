# GWI Engine Application Package
# This file marks the 'app' directory as a Python package
