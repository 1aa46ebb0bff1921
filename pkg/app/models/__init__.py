"""Domain models: game instances, mechanisms and tree instances."""
