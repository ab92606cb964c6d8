# Penalized obstacle-problem lab
