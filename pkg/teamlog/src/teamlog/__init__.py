# Package initialization for the teamlog workbench
