//! Drive the batch front end in-process, the same way the `bgreen` binary does.

use boltzmann_green::cli::run;

fn main() {
    let commands: [&[&str]; 3] = [
        &["bgreen", "density", "--c", "0.9", "--beta", "1.0", "--r", "0.5,1,2"],
        &["bgreen", "fourier-modes", "--c", "0.8", "--beta", "1.0,1.5,0.5", "--k", "1.0", "--khat", "0.8,1.1", "--lmax", "2"],
        &["bgreen", "mc", "--c", "0.9", "--shells", "0.5,1,2", "--histories", "20000", "--emit-config"],
    ];
    for argv in commands {
        println!("$ {}", argv.join(" "));
        let code = run(argv.iter().copied());
        println!("(exit {code})\n");
    }
}
