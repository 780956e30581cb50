# ODIN toolkit source packages
