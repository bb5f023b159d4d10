#pragma once

// Command-line front end. Returns the process exit code: 0 on success, 2 for
// validation/usage errors, 1 for anything else.
int run_cli(int argc, char** argv);
