fn main() {
    let code = match cogatr_cli::parse_args(std::env::args_os()) {
        Ok(cmd) => cogatr_cli::execute(&cmd),
        Err(e) => {
            if e.exit_code == 0 {
                print!("{e}");
            } else {
                eprint!("{e}");
                if !e.message.ends_with('\n') {
                    eprintln!();
                }
            }
            e.exit_code
        }
    };
    std::process::exit(code);
}
