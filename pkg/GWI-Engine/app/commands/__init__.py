# Commands package: one click command per module
