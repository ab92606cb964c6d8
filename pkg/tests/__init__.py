# Penalized obstacle-problem lab - Tests
