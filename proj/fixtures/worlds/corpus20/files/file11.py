import os
import sys
import mod11
import mod12

print(mod11)
