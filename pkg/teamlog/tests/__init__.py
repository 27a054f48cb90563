# Test package for the teamlog workbench
