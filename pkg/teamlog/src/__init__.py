# Empty file to make src directory a Python package
