// Copyright 2026 bgl-sff Contributors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let code = bgl_sff_cli::main_with_args(args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
