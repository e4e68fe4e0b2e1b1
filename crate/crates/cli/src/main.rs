use clap::Parser;
use petkit_cli::{execute, render_pretty, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match execute(&cli) {
        Ok(records) => {
            for r in &records {
                if cli.pretty {
                    print!("{}", render_pretty(r));
                } else {
                    println!("{r}");
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
