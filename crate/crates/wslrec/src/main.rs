use clap::Parser;

fn main() {
    let cli = match wslrec::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(e.exit_code());
        }
    };
    if let Err(e) = wslrec::cli::run(&cli) {
        eprintln!("wslrec: error: {e}");
        std::process::exit(1);
    }
}
