# Test modules for the ODIN toolkit
